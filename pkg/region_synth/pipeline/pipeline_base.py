import logging

from region_synth.data import TrainConfig


class PipelineBase:
    """
    A base class for the stages of the training pipeline. Anything common to all stages should be added here.

    Attributes:
        config (TrainConfig): the run's training configuration.
        logger (logging.Logger): logger shared by every stage of a run.
    """

    def __init__(self, config: TrainConfig, logger: logging.Logger | None = None):
        self.config = config
        self.logger = logger if logger is not None else logging.getLogger("region_synth")
