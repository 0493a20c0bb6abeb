"""End-to-end acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that the terminal summary prints.
"""

import math
import time

import numpy as np
import pytest

from ctxnav.cli import main
from ctxnav.context import ENV_CONTEXTS, ContextLabel, ContextSmoother, extract_features, predict_svm
from ctxnav.geom import best_fit_circle, circularity, linearity
from ctxnav.paccet import build_front, normalize, paccet_fitness, pareto_front, select_best
from ctxnav.sim import PERSONAL_SPACE, default_model, trace_labels
from ctxnav.social import corridor_frame, oformation_goal, queue_goal

from conftest import ACCEPTANCE, RUN_SECONDS, random_rigid, regular_polygon
from oracles import brute_front


def report(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    assert ok, detail


def test_criterion_01_classifier_training(tmp_path, capsys):
    start = time.perf_counter()
    code = main(["train", "--synthetic", "--seed", "7", "--out", str(tmp_path / "model.txt")])
    elapsed = time.perf_counter() - start
    out = capsys.readouterr().out
    fields = dict(line.split(": ", 1) for line in out.splitlines())
    train, test = float(fields["train accuracy"]), float(fields["test accuracy"])
    ok = code == 0 and fields["samples"].startswith("340 ") and train == 1.0 and test == 1.0 and elapsed < 2.0
    report(1, ok, f"{fields['samples']}, train {train:.4f}, test {test:.4f}, {elapsed:.2f} s")


def test_criterion_02_feature_correctness():
    checks = {
        "square C": abs(circularity([(0, 0), (1, 0), (1, 1), (0, 1)]) - math.pi / 4) <= 1e-9,
        "hexagon C": abs(circularity(regular_polygon(6)) - 0.9069) <= 1e-4,
        "collinear L": abs(linearity([(0, 0), (1, 0), (2, 0), (3, 0)]) - 1.0) <= 1e-9,
        "circle-8 L": abs(linearity(regular_polygon(8))) <= 1e-9,
    }
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        xy = rng.uniform(-3, 3, (int(rng.integers(3, 9)), 2))
        move = random_rigid(rng)
        worst = max(worst, abs(circularity(move(xy)) - circularity(xy)), abs(linearity(move(xy)) - linearity(xy)))
    checks["rigid invariance"] = worst <= 1e-9
    failed = [k for k, v in checks.items() if not v]
    report(2, not failed, f"worst rigid-transform drift {worst:.1e}" + (f"; failed {failed}" if failed else ""))


def test_criterion_03_paccet_properties():
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    member_err = 0.0
    monotone_violations = oracle_mismatches = argmin_changes = 0
    for _ in range(1000):
        n, d = int(rng.integers(1, 201)), int(rng.integers(2, 6))
        raw = rng.random((n, d)) * rng.uniform(0.1, 100.0, d)
        if rng.random() < 0.3:  # repeated values exercise ties and duplicates
            raw = np.round(raw, 1)
        if pareto_front(raw).tolist() != brute_front(raw):
            oracle_mismatches += 1
        norm, _ = normalize(raw)
        front = build_front(norm)
        member_err = max(member_err, float(np.abs(paccet_fitness(front, front.members) - 1.0).max()))
        fit = paccet_fitness(front, norm)
        p = norm[rng.integers(n, size=20)]
        q = p + rng.random(p.shape) * rng.uniform(0, 0.5)
        monotone_violations += int((paccet_fitness(front, p) > paccet_fitness(front, q) + 1e-12).sum())
        le = (norm[:, None, :] <= norm[None, :, :]).all(axis=2)
        monotone_violations += int((le & (fit[:, None] > fit[None, :] + 1e-12)).sum())
        base = select_best(raw).index
        for _ in range(50):
            a, b = rng.uniform(0.01, 100.0, d), rng.uniform(-100.0, 100.0, d)
            argmin_changes += select_best(raw * a + b).index != base
    elapsed = time.perf_counter() - start
    ok = member_err <= 1e-6 and monotone_violations == 0 and oracle_mismatches == 0 and argmin_changes == 0 \
        and elapsed < 30.0
    report(3, ok, f"member |fit-1| max {member_err:.1e}, monotonicity violations {monotone_violations}, "
                  f"oracle mismatches {oracle_mismatches}, argmin changes {argmin_changes}, {elapsed:.1f} s")


def test_criterion_04_hallway(sim_run, scenario):
    s = scenario("hallway")
    social, sm = sim_run("hallway", "social")
    _, tm = sim_run("hallway", "traditional")
    region = next(r for r in s.regions if r.label == "hallway")
    travel = np.array([s.robot_goal.x - s.robot_start.x, s.robot_goal.y - s.robot_start.y])
    frame = corridor_frame(region.polygon, travel)
    passing = [r for r in social
               if min(r.robot.distance_to(p) for p in s.persons_at((r.tick + 1) * 0.1)) <= 4.0]
    right = sum(float(frame.lateral(np.array([r.robot.x, r.robot.y]))) < 0.0 for r in passing)
    share = right / len(passing)
    times = (RUN_SECONDS[("hallway", "social")], RUN_SECONDS[("hallway", "traditional")])
    ok = sm.min_person_distance >= PERSONAL_SPACE and share >= 0.8 and tm.min_person_distance < PERSONAL_SPACE \
        and max(times) < 5.0 and passing
    report(4, ok, f"social min {sm.min_person_distance:.3f} m, right half {share:.0%} of {len(passing)} passing "
                  f"ticks; traditional min {tm.min_person_distance:.3f} m; runs {times[0]:.2f}/{times[1]:.2f} s")


def test_criterion_05_art_gallery(sim_run):
    _, sm = sim_run("gallery", "social")
    _, tm = sim_run("gallery", "traditional")
    ok = sm.activity_zone_time == 0.0 and tm.activity_zone_time > 0.0 and sm.success and tm.success
    report(5, ok, f"zone time social {sm.activity_zone_time:.1f} s / traditional {tm.activity_zone_time:.1f} s; "
                  f"success {sm.success}/{tm.success}")


def test_criterion_06_queue(sim_run, scenario):
    s = scenario("queue")
    social, sm = sim_run("queue", "social")
    trad, tm = sim_run("queue", "traditional")
    goal = queue_goal(s.persons_at(0.0), s.machines[0], s.robot_start).pose.point
    d_social = social[-1].robot.distance_to(goal)
    d_trad = trad[-1].robot.distance_to(goal)
    trad_ok = tm.personal_space_violation_time > 0.0 or d_trad > 0.5
    ok = d_social <= 0.3 and sm.personal_space_violation_time == 0.0 and trad_ok
    report(6, ok, f"social ends {d_social:.3f} m from queue end, violation {sm.personal_space_violation_time:.1f} s; "
                  f"traditional violation {tm.personal_space_violation_time:.1f} s, ends {d_trad:.2f} m away")


def test_criterion_07_oformation(sim_run, scenario):
    s = scenario("oformation")
    social, _ = sim_run("oformation", "social")
    trad, _ = sim_run("oformation", "traditional")
    people = s.persons_at(0.0)
    circle = best_fit_circle(people)
    slot = oformation_goal(people, s.robot_start).pose.point
    centroid = np.mean([(p.x, p.y) for p in people], axis=0)
    limit = 0.5 * circle.radius

    def closest(records):
        return min(min(r.robot.distance_to(circle.center), math.hypot(r.robot.x - centroid[0], r.robot.y - centroid[1]))
                   for r in records)

    d_slot = social[-1].robot.distance_to(slot)
    ok = d_slot <= 0.3 and closest(social) >= limit and closest(trad) < limit
    report(7, ok, f"social ends {d_slot:.3f} m from slot, nearest centre {closest(social):.2f} m "
                  f"(limit {limit:.2f}); traditional nearest {closest(trad):.2f} m")


def test_criterion_08_context_timeline(sim_run, scenario):
    s = scenario("timeline")
    records, _ = sim_run("timeline")
    labels = [c.value for c in trace_labels(records)]
    want = ["hallway", "art_gallery", "oformation", "queue"]
    model = default_model()
    group = [i for i, p in enumerate(s.persons) if p.script is not None]
    # the transition spans the knots between which some scripted person actually moves
    moving = [(k0[0], k1[0]) for i in group for k0, k1 in zip(s.persons[i].script.knots, s.persons[i].script.knots[1:])
              if (k0[1], k0[2]) != (k1[1], k1[2])]
    t0, t1 = min(a for a, _ in moving), max(b for _, b in moving)
    mixed = 0
    for r in records:
        t = (r.tick + 1) * 0.1
        if t0 - 1.0 <= t <= t1 + 2.0:
            truth = predict_svm(model, extract_features([s.persons[i].at(t) for i in group])).label
            mixed += r.context is not truth
    ok = labels == want and mixed <= 10
    report(8, ok, f"labels {labels}, mixed window {mixed} ticks over {t0 - 1.0:.0f}-{t1 + 2.0:.0f} s")


def test_criterion_09_smoother():
    rng = np.random.default_rng(9)
    smoother = ContextSmoother(10)
    truth = ENV_CONTEXTS.index(ContextLabel.Hallway)
    out = []
    flips = 0
    for _ in range(1000):
        p = np.zeros(len(ENV_CONTEXTS))
        if rng.random() < 0.1:
            flips += 1
            p[rng.choice([i for i in range(len(ENV_CONTEXTS)) if i != truth])] = 1.0
        else:
            p[truth] = 1.0
        out.append(smoother.update(p))
    switches = sum(a is not b for a, b in zip(out[10:], out[11:]))
    report(9, switches == 0 and out[-1] is ContextLabel.Hallway,
           f"{flips} injected flips, {switches} switches after tick 10")


@pytest.mark.parametrize("tag", ["all-bundled"])
def test_criterion_10_determinism(tmp_path, capsys, tag):
    from ctxnav.cli import builtin_scenarios

    diffs = []
    for name in builtin_scenarios():
        outs = []
        for k in range(2):
            trace, metrics = tmp_path / f"{name}{k}.csv", tmp_path / f"{name}{k}.json"
            assert main(["run", name, "--seed", "11", "--out", str(trace), "--metrics", str(metrics)]) == 0
            outs.append((trace.read_bytes(), metrics.read_bytes()))
        if outs[0] != outs[1]:
            diffs.append(name)
    capsys.readouterr()
    report(10, not diffs, f"{len(builtin_scenarios())} scenarios run twice, differing: {diffs or 'none'}")
