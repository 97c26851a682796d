"""Exception types shared by all modules."""


class StabEnvError(Exception):
    """Base class for every error raised by the package."""


class UnassignedSymbol(StabEnvError):
    def __init__(self, name):
        super().__init__(f"symbol {name!r} has no assigned log")
        self.name = name


class PoleAtArgument(StabEnvError):
    def __init__(self, what, magnitude=None):
        msg = f"theta vanishes in a denominator: {what}"
        if magnitude is not None:
            msg += f" (|theta| = {float(magnitude):.3e})"
        super().__init__(msg)
        self.what = what


class NonGenericParameters(StabEnvError):
    pass


class LimitUnstable(StabEnvError):
    def __init__(self, label, disagreement):
        super().__init__(
            f"restriction {label} depends on the perturbation direction "
            f"(relative disagreement {float(disagreement):.3e})"
        )
        self.label = label
        self.disagreement = disagreement


class DiagramOutOfRectangle(StabEnvError):
    pass


class BoxNotInTree(StabEnvError):
    pass


class InvolutionUndefined(StabEnvError):
    pass


class PairNotConnected(StabEnvError):
    pass


class SingularRestrictionMatrix(StabEnvError):
    pass


class InvalidNK(StabEnvError):
    pass
