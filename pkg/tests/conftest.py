from hypothesis import HealthCheck, settings

# Fock-space cases build dense matrices, so wall-clock per example is noisy;
# judge examples by assertions, not by the profiler.
settings.register_profile(
    "dstfid", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("dstfid")
