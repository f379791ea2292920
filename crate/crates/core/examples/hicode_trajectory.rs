//! Runs the identify/refine loop on G(600, 15, 12, 0.1, 0.12) for a few
//! seeds and prints NMI to the planted layers after every round.

use hicode_lab::hicode::{self, HicodeConfig};
use hicode_lab::louvain::LouvainConfig;
use hicode_lab::metrics::{match_layers, nmi};
use hicode_lab::sbm::{generate, Placement, SbmParams};

fn main() -> hicode_lab::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    for seed in 0..seeds {
        let params = SbmParams::two_layer(600, 15, 12, 0.1, 0.12, seed, Placement::RandomBalanced);
        let (g, truth) = generate(&params)?;
        let cfg = HicodeConfig {
            base: LouvainConfig::with_seed(seed),
            seed,
            refine_rounds: 2,
            convergence_nmi: 1.0,
            ..HicodeConfig::default()
        };
        let single = hicode_lab::louvain::detect(&g, &cfg.base)?;
        let found = hicode::identify(&g, &cfg)?;
        let mut line = format!(
            "seed {seed}: louvain vs layer2 {:.3} | identify",
            nmi(&single, &truth.layers[1])?
        );
        for m in match_layers(&found.layers, &truth.layers)? {
            line += &format!(" {:.3}", m.map_or(0.0, |x| x.1));
        }
        let refined = hicode::refine(&g, found.layers, &cfg)?;
        line += " | refined";
        for m in match_layers(&refined.layers, &truth.layers)? {
            line += &format!(" {:.3}", m.map_or(0.0, |x| x.1));
        }
        println!("{line}");
    }
    Ok(())
}
