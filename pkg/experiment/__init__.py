"""This package contains the training protocol and the experiment grid.

    -- <config.py>:   ExperimentConfig, its JSON form and the named profiles.
    -- <grid.py>:     enumeration and filtering of the encoder x overlap x adapter x word-embedding grid.
    -- <trainer.py>:  early-stopped training of one (setting, seed) and its evaluation.
    -- <runner.py>:   multi-seed suites, summaries and significance contrasts.
"""
