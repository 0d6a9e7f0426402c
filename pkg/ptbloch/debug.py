import sys

from ptbloch.config import PTB_DEBUG


def debugger_hook(type, value, tb):
    """
    Installed as `sys.excepthook` with --debug or PTB_DEBUG=true so an uncaught exception (a Newton run that
    blew up, an integrator failure) drops into the post-mortem debugger with the numerical state intact.

    Without a tty, or in an interactive session, the default hook is used.
    """
    if hasattr(sys, 'ps1') or not sys.stderr.isatty():
        sys.__excepthook__(type, value, tb)
    else:
        import pdb
        import traceback
        traceback.print_exception(type, value, tb)
        print()
        pdb.post_mortem(tb)


def install_debugger_hook(args=None) -> bool:
    if PTB_DEBUG or (args is not None and getattr(args, "debug", False)):
        sys.excepthook = debugger_hook
        return True
    return False
