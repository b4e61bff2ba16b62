class ExporterError(Exception):
    """Base class for exporter failures."""


class ModelError(ExporterError):
    """The embedding model could not be loaded or failed on an input."""


class ImageDecodeError(ExporterError):
    """The input file is not a decodable image."""
