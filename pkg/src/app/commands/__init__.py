from .base import cli
from .estimate import estimate
from .eval import evaluate
from .experiment import experiment
from .gen import gen
from .perturb import perturb
