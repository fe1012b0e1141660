"""Terminal summary: one pass/fail line per acceptance criterion."""

from __future__ import annotations

_ACCEPTANCE_OUTCOMES: dict[str, str] = {}

CRITERION_LABELS = {
    "test_disjoint_complete_segmentation": "disjoint-complete segmentation over 50 random scenes (<2s per 512x512)",
    "test_oracle_round_trip": "oracle round-trip: exact on occlusion-free, acc>=0.98 iou>=0.95 on occluded",
    "test_filter_suppresses_exactly_the_injected_duplicates": "filter correctness: duplicates suppressed, label map unchanged",
    "test_refinement_ablation_improves_seg_iou": "refinement ablation: depth refinement improves seg_iou on >=19/20 scenes",
    "test_ap_suite_matches_bruteforce_within_1e9": "metrics oracle: ap_suite vs brute force (1e-9), AP@50>=AP@75",
    "test_kendall_tau_exact_for_all_small_permutations": "metrics oracle: kendall tau exact for all permutations n<=6",
    "test_raster_primitives_match_bruteforce": "raster oracles: close/fill/distance on 200 masks, 1000 rle round-trips",
    "test_determinism_across_worker_pool_sizes": "determinism: pool sizes 1 and 8 give bit-identical outputs",
}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _ACCEPTANCE_OUTCOMES[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for name, label in CRITERION_LABELS.items():
        if name in _ACCEPTANCE_OUTCOMES:
            outcome = "PASS" if _ACCEPTANCE_OUTCOMES[name] == "passed" else "FAIL"
            terminalreporter.write_line(f"{outcome}  {label}")
