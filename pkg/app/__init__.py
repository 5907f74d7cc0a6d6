"""
NLS Harmônico: motor espectral de simulação e verificação
para a NLS crítica em energia com potencial harmônico.
"""

__version__ = "1.0.0"
