"""De-domaining data augmentation and evaluation toolkit for low-resource
multi-domain dialogue corpora."""

__version__ = "0.1.0"
