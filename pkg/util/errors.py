"""Exceptions raised for invalid inputs, files and runs."""


class CaptioningError(ValueError):
    pass


class ConfigError(CaptioningError):
    pass


class FormatError(CaptioningError):
    """Malformed input file; <line> is 1-based when the format is line oriented."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ''
        if path is not None:
            where = '%s' % path + (':%d' % line if line is not None else '')
        super().__init__('%s: %s' % (where, message) if where else message)


class TrainingError(CaptioningError):
    pass


class MissingEmbeddingError(CaptioningError):
    def __init__(self, clip_ids, directory=None):
        self.clip_ids = sorted(clip_ids)
        super().__init__('missing audio embedding files%s for clips: %s'
                         % (' in %s' % directory if directory else '', ', '.join(self.clip_ids)))
