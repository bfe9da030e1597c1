"""Autograd tensors, parameters, graph attention layers and optimizers."""
