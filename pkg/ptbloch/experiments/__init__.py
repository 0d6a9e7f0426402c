from ptbloch.experiments.base import Experiment
from ptbloch.experiments.discriminant import DiscriminantExperiment
from ptbloch.experiments.divisor import DivisorExperiment
from ptbloch.experiments.dubrovin import DubrovinExperiment
from ptbloch.experiments.locus import LocusExperiment
from ptbloch.experiments.resonance import ResonanceExperiment

EXPERIMENTS = dict(
    discriminant=DiscriminantExperiment,
    resonance=ResonanceExperiment,
    divisor=DivisorExperiment,
    dubrovin=DubrovinExperiment,
    locus=LocusExperiment,
)
