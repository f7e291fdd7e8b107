"""Integer codes for the regularizer modes, shared by both kernel backends."""

MODE_OFF = 0
MODE_HYBRID = 1
MODE_V1_ALL = 2
MODE_V2_ALL = 3
MODE_V2_CLOSE = 4

MODE_CODES = {
    "off": MODE_OFF,
    "hybrid": MODE_HYBRID,
    "v1_all": MODE_V1_ALL,
    "v2_all": MODE_V2_ALL,
    "v2_close_only": MODE_V2_CLOSE,
}
