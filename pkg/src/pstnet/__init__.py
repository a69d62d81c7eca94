"""EEG emotion classification with an attention-recalibrated 3-D CNN.

The package is self-contained on numpy: a small reverse-mode autodiff engine
(:mod:`pstnet.tensor`), differential-entropy feature extraction
(:mod:`pstnet.features`), electrode-grid assembly (:mod:`pstnet.layout`),
positional/spectral/temporal attention (:mod:`pstnet.attention`), the
classifier (:mod:`pstnet.model`), Adam training (:mod:`pstnet.train`),
binary dataset files plus synthetic generators (:mod:`pstnet.dataio`), and a
command-line front end (:mod:`pstnet.cli`).
"""

__version__ = "0.1.0"
