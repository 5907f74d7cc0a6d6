"""
Hierarquia de exceções do NLS Harmônico.

DomainRejection sinaliza pré-condições violadas (saída 2 na CLI);
NumericalFailure sinaliza falhas numéricas durante a execução (saída 3).
"""

from typing import Any, Dict, Optional


class NLSHarmonicError(Exception):
    """Erro base do pacote."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}

    def to_dict(self) -> dict:
        """Converte o erro para dicionário (failure.json)."""
        return {"error": type(self).__name__, "message": str(self), "details": self.details}


class DomainRejection(NLSHarmonicError):
    """Entrada fora do domínio de validade da operação."""

    pass


class NonFiniteValueError(DomainRejection):
    """Valor não finito encontrado em um nó da grade."""

    pass


class NumericalFailure(NLSHarmonicError):
    """Falha numérica durante uma execução."""

    pass


class ConvergenceError(NumericalFailure):
    """Iteração de Picard sem convergência."""

    def __init__(self, message: str, last_residual: float, iterations: int):
        super().__init__(message, {"last_residual": last_residual, "iterations": iterations})
        self.last_residual = last_residual
        self.iterations = iterations


class FieldFormatError(NLSHarmonicError):
    """Arquivo NLSH1 malformado."""

    pass
