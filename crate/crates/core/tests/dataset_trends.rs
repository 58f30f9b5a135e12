// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.


//! Aggregate behaviour of generated corpora.

use circfid::dataset::{build_dataset, depth_deciles, read_jsonl, write_jsonl, DatasetConfig, DatasetRecord};
use circfid::devices::Device;
use circfid::stats::{mean, std_dev};

fn corpus(multiplier: f64, n: usize, seed: u64) -> (DatasetConfig, Vec<DatasetRecord>) {
    let mut device = Device::nairobi();
    device.noise = device.noise.with_multiplier(multiplier);
    let cfg = DatasetConfig::new(device, n, seed);
    let ds = build_dataset(&cfg).unwrap();
    assert_eq!(ds.stats.generated, n);
    assert_eq!(ds.stats.retained, ds.records.len());
    (cfg, ds.records)
}

/// Labels of each equal-count depth bin, cut independently of the library.
fn decile_labels(records: &[DatasetRecord]) -> Vec<Vec<f64>> {
    let mut by_depth: Vec<&DatasetRecord> = records.iter().collect();
    by_depth.sort_by(|a, b| a.depth.cmp(&b.depth).then(a.label.total_cmp(&b.label)));
    let n = by_depth.len();
    (0..10)
        .map(|k| by_depth[k * n / 10..(k + 1) * n / 10].iter().map(|r| r.label).collect())
        .collect()
}

#[test]
fn mean_label_does_not_rise_with_depth() {
    for (multiplier, seed) in [(1.0, 901), (2.0, 902)] {
        let (cfg, records) = corpus(multiplier, 2400, seed);
        assert!(records.len() >= 1500, "{} retained", records.len());
        assert!(records.len() < cfg.n_records, "cutoff should drop the deepest circuits");
        assert!(records.iter().all(|r| r.depth <= cfg.depth_cutoff));
        assert!(records.iter().all(|r| (0.0..=1.0).contains(&r.label)));

        let bins = decile_labels(&records);
        let lib = depth_deciles(&records);
        assert_eq!(lib.len(), 10);
        for (ours, theirs) in bins.iter().zip(&lib) {
            assert_eq!(ours.len(), theirs.count);
            assert!((mean(ours) - theirs.mean_label).abs() < 1e-12);
        }
        let summary: Vec<(f64, f64)> = bins
            .iter()
            .map(|b| (mean(b), std_dev(b) / (b.len() as f64).sqrt()))
            .collect();
        for (k, w) in summary.windows(2).enumerate() {
            let sigma = (w[0].1.powi(2) + w[1].1.powi(2)).sqrt();
            assert!(
                w[1].0 <= w[0].0 + 2.0 * sigma,
                "multiplier {multiplier}: decile {} mean {:.4} above decile {k} mean {:.4}",
                k + 1,
                w[1].0,
                w[0].0
            );
        }
        assert!(summary[0].0 > summary[9].0 + 0.2, "{summary:?}");
    }
}

#[test]
fn noisier_devices_give_lower_labels() {
    let (_, low) = corpus(0.5, 400, 77);
    let (_, high) = corpus(2.0, 400, 77);
    // same seed: the same circuits, labelled under different noise
    assert_eq!(low.len(), high.len());
    let lo: Vec<f64> = low.iter().map(|r| r.label).collect();
    let hi: Vec<f64> = high.iter().map(|r| r.label).collect();
    assert!(mean(&hi) < mean(&lo) - 0.1, "{} vs {}", mean(&hi), mean(&lo));
}

#[test]
fn jsonl_roundtrip_preserves_records() {
    let (cfg, records) = corpus(1.0, 60, 5);
    let mut buf = Vec::new();
    write_jsonl(&records, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().count(), records.len());
    let back = read_jsonl(buf.as_slice()).unwrap();
    assert_eq!(back, records);
    for r in &back {
        assert_eq!(r.device, cfg.device.name());
        assert_eq!(r.parse().unwrap().depth(), r.depth);
    }
    let mut again = Vec::new();
    write_jsonl(&corpus(1.0, 60, 5).1, &mut again).unwrap();
    assert_eq!(again, buf);
}
