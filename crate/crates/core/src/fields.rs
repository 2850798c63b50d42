//! Time-dependent external field profiles driving the models.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::models::{CVec3, ZERO_VEC3};

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("gaussian envelope width must be positive, got {width}")]
    BadGaussianWidth { width: f64 },
    #[error("rectangular envelope requires start < stop, got [{start}, {stop}]")]
    BadRectangularWindow { start: f64, stop: f64 },
}

/// Pulse envelopes, peak-normalized so amplitudes read directly as peak field
/// strength.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Envelope {
    Constant,
    /// `exp(-(t - center)^2 / (2 width^2))`.
    Gaussian { center: f64, width: f64 },
    /// 1 on the closed window `[start, stop]`, 0 outside.
    Rectangular { start: f64, stop: f64 },
}

impl Envelope {
    fn validate(&self) -> Result<(), FieldError> {
        match *self {
            Envelope::Constant => Ok(()),
            Envelope::Gaussian { width, .. } => {
                if width > 0.0 {
                    Ok(())
                } else {
                    Err(FieldError::BadGaussianWidth { width })
                }
            }
            Envelope::Rectangular { start, stop } => {
                if start < stop {
                    Ok(())
                } else {
                    Err(FieldError::BadRectangularWindow { start, stop })
                }
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant => 1.0,
            Envelope::Gaussian { center, width } => {
                let arg = (t - center) / width;
                (-0.5 * arg * arg).exp()
            }
            Envelope::Rectangular { start, stop } => {
                if (start..=stop).contains(&t) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// One primitive pulse: a complex amplitude vector under an envelope, with
/// carrier convention `exp(-i (omega t + phase))` so the drive rotates with
/// the `c^+ v` term and resonance means `omega = (eps^c - eps^v) / hbar`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pulse {
    amplitude: CVec3,
    carrier_frequency: f64,
    phase: f64,
    envelope: Envelope,
}

impl Pulse {
    pub fn new(
        amplitude: CVec3,
        carrier_frequency: f64,
        phase: f64,
        envelope: Envelope,
    ) -> Result<Self, FieldError> {
        envelope.validate()?;
        Ok(Self { amplitude, carrier_frequency, phase, envelope })
    }

    pub fn amplitude(&self) -> &CVec3 {
        &self.amplitude
    }

    pub fn carrier_frequency(&self) -> f64 {
        self.carrier_frequency
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }
}

/// A sum of primitive pulses; the empty profile is the zero field.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FieldProfile {
    pulses: Vec<Pulse>,
}

impl FieldProfile {
    pub fn zero() -> Self {
        Self { pulses: Vec::new() }
    }

    pub fn new(pulses: Vec<Pulse>) -> Self {
        Self { pulses }
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    /// `E(t) = sum_p amplitude_p envelope_p(t) exp(-i (omega_p t + phi_p))`;
    /// pure and deterministic.
    pub fn evaluate(&self, t: f64) -> CVec3 {
        let mut field = ZERO_VEC3;
        for pulse in &self.pulses {
            let envelope = pulse.envelope.value(t);
            let carrier =
                C64::new(0.0, -(pulse.carrier_frequency * t + pulse.phase)).exp() * envelope;
            for axis in 0..3 {
                field[axis] += pulse.amplitude[axis] * carrier;
            }
        }
        field
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn empty_profile_is_zero_everywhere() {
        let profile = FieldProfile::zero();
        for t in [-1.0, 0.0, 0.5, 100.0] {
            assert_eq!(profile.evaluate(t), ZERO_VEC3);
        }
    }

    #[test]
    fn constant_pulse_with_zero_carrier_is_constant() {
        let amp = [cv(1.0, 0.0), cv(0.0, 0.0), cv(0.0, 0.0)];
        let profile =
            FieldProfile::new(vec![Pulse::new(amp, 0.0, 0.0, Envelope::Constant).unwrap()]);
        for t in [0.0, 1.0, 17.5] {
            assert_eq!(profile.evaluate(t), amp);
        }
    }

    #[test]
    fn gaussian_peak_reaches_amplitude() {
        let amp = [cv(0.5, -0.25), cv(0.0, 1.0), cv(0.0, 0.0)];
        let profile = FieldProfile::new(vec![Pulse::new(
            amp,
            0.0,
            0.0,
            Envelope::Gaussian { center: 3.0, width: 0.7 },
        )
        .unwrap()]);
        assert_eq!(profile.evaluate(3.0), amp);
        let off_peak = profile.evaluate(3.7);
        assert!(off_peak[0].norm() < amp[0].norm());
    }

    #[test]
    fn carrier_rotates_clockwise() {
        let amp = [cv(1.0, 0.0), cv(0.0, 0.0), cv(0.0, 0.0)];
        let profile =
            FieldProfile::new(vec![Pulse::new(amp, std::f64::consts::PI, 0.0, Envelope::Constant)
                .unwrap()]);
        let at_one = profile.evaluate(1.0);
        // exp(-i pi) = -1.
        assert!((at_one[0] - cv(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn invalid_envelopes_rejected() {
        let amp = ZERO_VEC3;
        assert_eq!(
            Pulse::new(amp, 0.0, 0.0, Envelope::Gaussian { center: 0.0, width: 0.0 }),
            Err(FieldError::BadGaussianWidth { width: 0.0 })
        );
        assert_eq!(
            Pulse::new(amp, 0.0, 0.0, Envelope::Rectangular { start: 2.0, stop: 1.0 }),
            Err(FieldError::BadRectangularWindow { start: 2.0, stop: 1.0 })
        );
    }

    #[test]
    fn evaluation_is_bitwise_reproducible() {
        let profile = FieldProfile::new(vec![
            Pulse::new(
                [cv(0.3, 0.4), cv(-0.1, 0.0), cv(0.0, 0.2)],
                1.37,
                0.21,
                Envelope::Gaussian { center: 2.0, width: 1.3 },
            )
            .unwrap(),
            Pulse::new(
                [cv(1.0, 0.0), cv(0.0, 0.0), cv(0.0, 0.0)],
                0.5,
                0.0,
                Envelope::Rectangular { start: 0.0, stop: 4.0 },
            )
            .unwrap(),
        ]);
        for t in [0.0, 0.1, 2.0, 3.999, 4.0, 5.0] {
            let a = profile.evaluate(t);
            let b = profile.evaluate(t);
            for axis in 0..3 {
                assert_eq!(a[axis].re.to_bits(), b[axis].re.to_bits());
                assert_eq!(a[axis].im.to_bits(), b[axis].im.to_bits());
            }
        }
    }
}
