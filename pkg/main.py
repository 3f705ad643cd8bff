#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Entry point for the honeycomb Dirac point solver"""

import sys

from honeydirac.app import main

if __name__ == "__main__":
    sys.exit(main())
