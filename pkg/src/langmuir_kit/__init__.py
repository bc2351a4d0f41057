"""Linear and nonlinear numerics for the relativistic Vlasov-Klein-Gordon system."""

__version__ = "0.1.0"
