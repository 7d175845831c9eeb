"""Visual sentiment prediction from transferred CNN activations."""
