from typing import TYPE_CHECKING, Dict, Type

from .models import Command

if TYPE_CHECKING:
    from ..analyses.base import BaseAnalysis


class AnalysisFactory:
    _registry: Dict[Command, Type["BaseAnalysis"]] = {}

    @classmethod
    def register(cls, command: Command, analysis_cls: Type["BaseAnalysis"]):
        cls._registry[command] = analysis_cls

    @classmethod
    def get_analysis_class(cls, command: Command) -> Type["BaseAnalysis"]:
        command = Command(command)
        if command not in cls._registry:
            # Lazy load so that `pedsafe --help` stays fast
            if command == Command.CONFIDENCE:
                from ..analyses.confidence import ConfidenceAnalysis
                cls.register(command, ConfidenceAnalysis)
            elif command == Command.SOLVE_N:
                from ..analyses.solve_n import SolveNAnalysis
                cls.register(command, SolveNAnalysis)
            elif command == Command.MIN_FOLD:
                from ..analyses.min_fold import MinFoldAnalysis
                cls.register(command, MinFoldAnalysis)
            elif command == Command.CONTOUR:
                from ..analyses.contour import ContourAnalysis
                cls.register(command, ContourAnalysis)
            elif command == Command.SDS:
                from ..analyses.sds import SdsAnalysis
                cls.register(command, SdsAnalysis)
            elif command == Command.WIN_ODDS:
                from ..analyses.win_odds import WinOddsAnalysis
                cls.register(command, WinOddsAnalysis)
            elif command == Command.REPRODUCE:
                from ..analyses.reproduce import ReproduceAnalysis
                cls.register(command, ReproduceAnalysis)

        return cls._registry[command]
