"""Irregular repetition slotted ALOHA over the noiseless binary adder
channel: codebooks, SIC decoders, closed-form analysis, and a Monte-Carlo
experiment harness."""

from .analysis import (
    AsymptoticRegime,
    MprProfile,
    RegimeComparison,
    asymptotic_profile,
    asymptotic_sum_rate,
    codebook_size,
    compare_regimes,
    critical_collision_size,
    de_evolve,
    de_threshold,
    joint_pmf_a0_au,
    payload_length,
    pi_u_asymptotic,
    pi_u_exact,
    pi_u_half,
    pi_u_lower_bound,
    sandwich_check,
    sum_rate,
    t_ed_mpr,
    threshold_ed_mpr,
)
from .codebook import (
    BchKind,
    Codebook,
    FrameGraph,
    IidKind,
    build_frame_graph,
    export_graph_csv,
    export_words,
    gen_bch_codebook,
    gen_iid_codebook,
    replica_profile,
)
from .decoders import (
    DecodeOutcome,
    DecoderState,
    bch_decode,
    bch_slot_decode,
    discard_pass,
    ed_fg_decode,
    ed_mpr_decode,
    oracle_slot_decode,
    resolve_slot,
    singleton_decode,
)
from .degree import DegreeDistribution, edge_perspective, eval_edge_polynomial
from .montecarlo import (
    ExperimentSpec,
    PlrEstimate,
    PointSetup,
    decode_frame,
    make_point,
    read_csv,
    run_pi_u_point,
    run_plr_point,
    run_point_multi,
    sweep,
    users_for_load,
    wilson_interval,
    write_plr_csv,
)
from .protocol import (
    ReceivedFrame,
    ScenarioConfig,
    assign_codewords,
    sample_active_set,
    transmit,
)

__version__ = "0.1.0"
