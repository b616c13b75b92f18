"""wmlab: a desk-scale lab for data-poisoning DNN watermarks.

Generate / embed / verify black-box watermarks on a small from-scratch
convolutional classifier, run the preprocessing + fine-tuning removal attack
against them, and harden watermarks with augmented embedding.
"""

__version__ = "0.1.0"
