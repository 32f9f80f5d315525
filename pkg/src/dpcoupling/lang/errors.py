class LangError(Exception):
    pass


class ParseError(LangError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class UndeclaredVariable(ParseError):
    pass


class TypeCheckError(LangError):
    """Raised with the full list of type errors found in a program."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class EvalError(LangError):
    def __init__(self, message: str, memory=None):
        self.memory = memory
        super().__init__(message)
