class InputError(Exception):
    """Raised for unusable inputs: files, records, specs and configurations."""

    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)
