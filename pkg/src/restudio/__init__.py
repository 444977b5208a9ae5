"""Interactive per-object image restoration.

Pipeline: click-based segmentation, blind degradation-parameter
estimation with user-overridable strength, per-object restoration
(Wiener deblur / TV denoise / DCT deblock), enhancement, and feathered
compositing, exposed over HTTP and a CLI.
"""

from .compose import EnhanceSettings, ObjectLayer, apply_enhance, composite, export
from .degrade import (
    DegradationKind,
    DegradationSpec,
    apply_awgn,
    apply_blur,
    apply_degradation,
)
from .estimate import (
    DegradationParam,
    blockiness,
    estimate_blur_sigma,
    estimate_jpeg_quality,
    estimate_noise_sigma,
    make_blur_param,
)
from .imagecore import (
    Colorspace,
    ImageBuffer,
    Kernel2D,
    Mask,
    convert_colorspace,
    convolve,
    gaussian_kernel,
    psnr,
)
from .jpegcodec import QuantTables, jpeg_decode, jpeg_encode, quant_tables_for_quality
from .restore import (
    RestoreRequest,
    RestoreTask,
    deblock_dct,
    deblur_wiener,
    denoise_tv,
    restore,
)
from .segment import (
    ClickPoint,
    ClickPrompt,
    PointLabel,
    SegmentResult,
    feather,
    segment_builtin,
    segment_external,
)

__version__ = "0.1.0"
