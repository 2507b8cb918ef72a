//! Signal containers, STFT engine, WAV I/O and small DSP helpers.

mod conv;
mod resample;
mod stft;
mod wav;
mod waveform;

pub use conv::fft_convolve;
pub use resample::resample;
pub use stft::{
    analyze_centered, istft, stft, synthesize_centered, Spectrogram, StftConfig, Window,
};
pub use wav::{read_wav, write_wav, WavEncoding};
pub use waveform::{MultichannelWaveform, DEFAULT_SAMPLE_RATE_HZ};
