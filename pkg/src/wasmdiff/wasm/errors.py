class WasmError(Exception):
    pass


class MalformedBinary(WasmError):
    def __init__(self, offset: int, reason: str):
        super().__init__(f"malformed binary at 0x{offset:x}: {reason}")
        self.offset = offset
        self.reason = reason


class UnsupportedProposal(WasmError):
    def __init__(self, name: str, offset: int = -1):
        super().__init__(f"unsupported proposal: {name}")
        self.name = name
        self.offset = offset


class EncodingOverflow(WasmError):
    pass
