"""Text processing, graph construction, model, training and reporting services."""
