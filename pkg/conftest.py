# Puts the repository root on sys.path so ``honeydirac`` imports without installation.
