"""Future-frame prediction by test-time optimisation of a backward flow.

Arrays are float64 numpy arrays shaped (H, W, C). Functions that take
``options`` accept the same keys as the config file, for example::

    import flowcast
    scene = flowcast.generate_scene({"scene": "translate"})
    pred = flowcast.predict_next(scene["frames"][0], scene["frames"][1], iterations=300)
"""

try:
    from . import _flowcast as _ext
except ImportError:  # running from a build tree with the module on sys.path
    import _flowcast as _ext

for _name in dir(_ext):
    if not _name.startswith("_"):
        globals()[_name] = getattr(_ext, _name)
del _name


def predict_next(prev, curr, **options):
    """Predict the frame after ``curr``; returns frame, flow, trace and final_loss."""
    return _ext.predict_next(prev, curr, options)


def predict_sequence(prev, curr, horizon, **options):
    """Recurrent rollout of ``horizon`` frames."""
    return _ext.predict_sequence(prev, curr, horizon, options)


def generate_scene(options=None, **kwargs):
    """Synthetic frames with exact flows. ``scene`` defaults to translate."""
    return _ext.generate_scene({**(options or {}), **kwargs})


def run(**options):
    """Run a full configuration (writes files like the CLI); returns the metrics."""
    return _ext.run(options)
