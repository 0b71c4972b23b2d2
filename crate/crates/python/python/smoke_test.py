"""Smoke test for the erlquad extension module.

Build and install first:

    pip install -e crates/python --no-build-isolation
    python crates/python/python/smoke_test.py
"""

import os
import tempfile

import erlquad as q


def main():
    env = q.QuadrupedEnv(q.Terrain("flat"), t_max=200)
    obs = env.reset(0)
    assert len(obs) == q.OBS_DIM
    total = 0.0
    steps = 0
    while True:
        obs, reward, done, info = env.step(env.nominal_joints)
        total += reward
        steps += 1
        if done:
            break
    assert info["done_reason"] == "timeout", info
    print(f"standing: {steps} steps, return {total:.1f}, final height {env.torso_position[2]:.3f}")

    rough = q.Terrain("rough", seed=4, amplitude=0.03)
    print(f"rough height at (1, 0.5): {rough.height(1.0, 0.5):+.4f}")

    actor = q.Network.actor(q.OBS_DIM, q.ACTION_DIM, [32, 32], 0.7, seed=1)
    action = actor.forward(obs)
    assert len(action) == q.ACTION_DIM and all(abs(a) <= 0.7 for a in action)

    state = q.CemState([1.0] * 5, variance=1.0, noise_floor=1e-8, population_size=32, elite_count=16)
    for g in range(60):
        samples = state.sample(g)
        state = state.update(samples, [-sum(x * x for x in z) for z in samples])
    norm = sum(m * m for m in state.mean) ** 0.5
    assert norm < 1e-2, norm
    print(f"cem sphere: |mu| = {norm:.2e} after {state.generation} generations")

    stats = q.summarize([1.0, 2.0, 3.0, 4.0])
    assert stats["mean"] == 2.5 and abs(stats["std"] - 1.2910) < 1e-4

    with tempfile.TemporaryDirectory() as tmp:
        cfg = os.path.join(tmp, "tiny.cfg")
        with open(cfg, "w") as f:
            f.write("env.t_max = 50\ntrain.hidden = [16, 16]\ntrain.warmup_steps = 20\nrl.batch_size = 16\n")
        returns = q.train(os.path.join(tmp, "run"), "td3", config=cfg, seed=3, budget=2)
        assert len(returns) == 2
        report = q.transfer(os.path.join(tmp, "run", "final_checkpoint.json"), trials=10, seed=0)
        assert len(report["flat"]["trial_returns"]) == 10
        print(report["table"])

    print("smoke test passed")


if __name__ == "__main__":
    main()
