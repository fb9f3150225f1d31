//! Synthesize a Crisscross EEG recording with a known pCNV, then run the
//! full chain: mirror, notch and band-pass, ICA, epoch, reject, average.

use fingerlab::eeg::{process_recording, synth_recording, ProcessConfig, SynthConfig};
use fingerlab::kinematics::Workspace;
use fingerlab::patient::{PatientProfile, Side};

fn main() -> fingerlab::Result<()> {
    let cfg = SynthConfig {
        fixed_speed: Some(10.5),
        participant: PatientProfile::oracle(),
        noise_uv: 1.0,
        ..SynthConfig::default()
    };
    let synth = synth_recording(&cfg, 1)?;
    println!(
        "{} samples, {} blinks, expected Pz {:.3} uV",
        synth.recording.n_samples(),
        synth.truth.n_blinks,
        synth.truth.pz_window_uv
    );
    let ws = Workspace::assessment();
    let out = process_recording(&synth.recording, Side::Right, Some((&synth.kinematics, &ws)), &ProcessConfig::default())?;
    for e in out.pcnv.reported() {
        println!("{:>3}: {:?} uV (kept {})", e.label, e.amplitude_uv.map(|a| (a * 1000.0).round() / 1000.0), e.kept);
    }
    println!("rejected {:.1}% of epochs", 100.0 * out.rejection.removed_share());
    if let Some(ica) = out.ica {
        println!("ICA removed components {:?}", ica.removed);
    }
    Ok(())
}
