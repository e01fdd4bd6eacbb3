"""Exception hierarchy shared by every stage of the pipeline.

Each family carries the process exit code the CLI maps it to.
"""


class FanrecError(Exception):
    exit_code = 1


class ConfigError(FanrecError):
    exit_code = 2


class MissingPrerequisite(FanrecError):
    exit_code = 3

    def __init__(self, path, stage=None):
        self.path = str(path)
        self.stage = stage
        msg = f"missing prerequisite artifact: {self.path}"
        if stage:
            msg += f" (run stage '{stage}' first)"
        super().__init__(msg)


class DataError(FanrecError, ValueError):
    exit_code = 4


# corpus
class BadHeader(DataError):
    pass


class DuplicateArtist(DataError):
    pass


class AliasCollision(DataError):
    pass


class BadAlias(DataError):
    pass


class BadDate(DataError):
    pass


class BadSize(DataError):
    pass


class BadEnum(DataError):
    pass


class MalformedLine(DataError):
    def __init__(self, line_no, reason):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {reason}")


class DuplicateTweetId(DataError):
    pass


# vectorize
class EmptyCorpus(DataError):
    pass


class EmptyVocabulary(DataError):
    pass


# cluster
class InvalidK(DataError):
    pass


class EmptyInput(DataError):
    pass


class NeedTwoClusters(DataError):
    pass


# recommend / eval
class EmptyCluster(DataError):
    pass


class SpecError(DataError):
    pass


class PartitionMismatch(DataError):
    pass


class StaleArtifact(DataError):
    pass


# annotate
class AnnotationError(FanrecError):
    exit_code = 5


class NoJsonFound(AnnotationError, ValueError):
    pass


class SchemaError(AnnotationError, ValueError):
    pass


class EnumError(SchemaError):
    pass
