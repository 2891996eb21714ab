"""Numeric constants of the platform inventory workflow."""

# Backscatter quantisation window (dB) and 8-bit range.
DB_MIN = -40.0
DB_MAX = 0.0
U8_MAX = 255

# Chipping geometry.
CHIP_SIZE = 640
CHIP_OVERLAP = 0.2
CHIP_STRIDE = int(round(CHIP_SIZE * (1.0 - CHIP_OVERLAP)))  # 512

# Tiling of the study areas.
TILE_STEP_DEG = 1.8
DEFAULT_PIXEL_SIZE_DEG = 0.0001

# Postprocessing thresholds.
CONF_MIN = 0.4
LEVEL_MIN = 150
IOU_DEDUP = 0.2
IOU_LINK = 0.1
EVAL_IOU = 0.3
EVAL_CONF = 0.5

# Study window, inclusive.
STUDY_START = "2017Q1"
STUDY_END = "2025Q1"
SNAPSHOT_QUARTER = STUDY_END

# Lifespan categories, in quarters.
SHORT_MAX_QUARTERS = 19  # < 5 years

# Geodesy.
EARTH_RADIUS_KM = 6371.0088
METERS_PER_DEG_LON_EQUATOR = 111320.0
METERS_PER_DEG_LAT = 110574.0
DEFAULT_MAX_SEG_KM = 1.0

REGION_CODES = ("NS", "PG", "GOM")
NONE = "NONE"

REGION_ALIASES = {
    "ns": "NS",
    "north sea": "NS",
    "pg": "PG",
    "persian gulf": "PG",
    "arabian gulf": "PG",
    "gom": "GOM",
    "gulf of mexico": "GOM",
    "gulf of méxico": "GOM",
}

# Synthetic sea clutter (dB).
SEA_MEAN_DB = -26.0
SEA_STD_DB = 2.0
SEA_CLAMP_DB = (-40.0, -18.0)
PLATFORM_MIN_DB = -16.0
SEA_MEAN_MAX_DB = -22.0
