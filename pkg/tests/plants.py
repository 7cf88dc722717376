"""Small readout plants shared by the discriminator and acceptance tests."""

from cryoctl.discriminator import CalibrationData, build_discriminator, separation_ratio
from cryoctl.readout import (AdcSpec, AmplifierStage, QubitReadoutModel, ReadoutCascade,
                             projected_statistics, settling_trajectories)
from cryoctl.signals import QuantizerSpec

# one ADC sample per bin keeps 10^6-shot runs fast
CASCADE = ReadoutCascade([AmplifierStage("ideal", 80.0, 0.0, 5e9)])
ADC = AdcSpec(500e6, QuantizerSpec(14, 1.0))


def _calibration(model):
    mu0, mu1, s = projected_statistics(model, CASCADE, ADC)
    return CalibrationData(mu0, mu1, s, 10 ** 6, 10 ** 6)


def tuned_plant(ratio, sigma_in=10e-6):
    """Plant whose full-window matched discriminator has separation ``ratio``."""
    m0, m1 = settling_trajectories(15, 2e-9, 10e-6, 5e-6, 6e-9, 40e-9)
    model = QubitReadoutModel(m0, m1, sigma_in, 2e-9)
    base = separation_ratio(_calibration(model), build_discriminator(_calibration(model)))
    model = model.scaled(ratio / base)
    cal = _calibration(model)
    return model, cal, build_discriminator(cal)
