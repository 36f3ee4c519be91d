class WavelabError(Exception):
    """Base class for every error raised by wavelab.

    Each module defines its own subclasses next to the code that raises them, so callers
    can catch a narrow failure or everything at once.
    """

    pass
