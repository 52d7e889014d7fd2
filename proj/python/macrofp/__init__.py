"""Fourier ptychography simulation, reconstruction and evaluation."""

from ._macrofp import (
    ApertureSpec,
    ChecksumError,
    ConfigError,
    DimensionError,
    Error,
    GeometryError,
    InputError,
    IoError,
    LayoutError,
    NumericalError,
    OpticalGeometry,
    __version__,
    add_noise,
    aperture_mask,
    aperture_samples,
    capture,
    contrast,
    count_for_sar,
    describe_dataset,
    diffraction_calc,
    forward_transform,
    intensity_rmse,
    inverse_transform,
    load_capture_set,
    make_chart,
    mtf20_limit,
    plan_grid,
    reconstruct,
    run_config,
)

__all__ = [name for name in dir() if not name.startswith("_")]
