from lesion.damage import (
    BASELINE,
    LesionReport,
    LesionSpec,
    LesionTarget,
    apply_lesion,
    compare_lesions,
    compress_repeats,
    format_lesion_tsv,
    lesion_report,
    lesion_sweep,
)
