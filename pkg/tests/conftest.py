import sys
from pathlib import Path

from hypothesis import HealthCheck, settings

# Tests import the oracle module directly (it is not part of the package).
sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "sharpv",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("sharpv")
