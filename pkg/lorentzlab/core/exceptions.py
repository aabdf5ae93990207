class LabError(Exception):
    """ Base class for all numerical laboratory errors """

    code = 'lab-error'

    def as_dict(self) -> dict:
        return {'code': self.code, 'message': str(self)}


class InvalidInput(LabError, ValueError):
    code = 'invalid-input'


class UndefinedInput(LabError, ValueError):
    code = 'undefined-input'


class ConstructionError(LabError):
    """ Metric construction failed, 'point' holds the offending cover point """

    code = 'construction-error'

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = None if point is None else [float(x) for x in point]

    def as_dict(self) -> dict:
        return {**super().as_dict(), 'point': self.point}


class WindowOverflow(LabError):
    """ Grid window too small, 'required' holds the window that would fit """

    code = 'window-overflow'

    def __init__(self, message: str, required=None):
        super().__init__(message)
        self.required = required

    def as_dict(self) -> dict:
        return {**super().as_dict(), 'required': self.required}


class Unavailable(LabError):
    code = 'unavailable'


class RejectedForm(LabError):
    """ A candidate transversal form failed, 'witness' holds point, vector and pairing """

    code = 'rejected-form'

    def __init__(self, message: str, witness: dict = None):
        super().__init__(message)
        self.witness = witness or {}

    def as_dict(self) -> dict:
        return {**super().as_dict(), 'witness': self.witness}
