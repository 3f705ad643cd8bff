import logging
import os
import sys

from colorama import Fore, Style, just_fix_windows_console

PACKAGE_LOGGER = "honeydirac"

VERBOSE_LEVEL = {0: logging.WARNING, 1: logging.INFO, 2: logging.DEBUG}

LEVEL_STYLE = {
    logging.DEBUG: (Fore.CYAN, "🔎"),
    logging.INFO: (Fore.GREEN, "✅"),
    logging.WARNING: (Fore.YELLOW, "⚠️ "),
    logging.ERROR: (Fore.RED, "❌"),
    logging.CRITICAL: (Fore.RED + Style.BRIGHT, "❌"),
}


class GlyphFormatter(logging.Formatter):
    """Console formatter with the per-level colour and glyph prefix."""

    def __init__(self, use_color=True):
        super().__init__("%(message)s")
        self.use_color = use_color

    def format(self, record):
        color, glyph = LEVEL_STYLE.get(record.levelno, ("", ""))
        text = f"{glyph} {super().format(record)}"
        if self.use_color:
            return f"{color}{text}{Style.RESET_ALL}"
        return text


def _wants_color(stream):
    if os.environ.get("NO_COLOR"):
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def configure_logging(verbose=0, stream=None):
    """Attach one glyph handler to the package logger; repeated calls only reset the level."""
    stream = stream or sys.stderr
    logger = logging.getLogger(PACKAGE_LOGGER)
    logger.setLevel(VERBOSE_LEVEL[min(max(verbose, 0), 2)])

    for handler in logger.handlers:
        if getattr(handler, "_honeydirac", False):
            handler.setStream(stream)
            return logger

    just_fix_windows_console()
    handler = logging.StreamHandler(stream)
    handler.setFormatter(GlyphFormatter(use_color=_wants_color(stream)))
    handler._honeydirac = True
    logger.addHandler(handler)
    logger.propagate = False
    return logger
