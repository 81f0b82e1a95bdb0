#!/usr/bin/env python3
"""
Quick verification that the TPE solver is working
Small meshes only, runs in seconds
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

print("=" * 70)
print("🔍 VERIFYING TPE")
print("=" * 70)
print()

# Test 1: Import Core Modules
print("Test 1: Importing core modules...")
try:
    from src.analysis import convergence_study, estimate_infsup
    from src.mesh import Rectangle, generate_cartesian, generate_voronoi, regularity_report
    from src.physics import baseline_coefficients, convergence_case, geothermal_case, validate
    from src.solver import FixedPointConfig, ThetaScheme, run
    from src.space import DgSpace
    print("✅ All modules imported successfully")
except Exception as e:
    print(f"❌ Import failed: {e}")
    sys.exit(1)

print()

# Test 2: Mesh generation
print("Test 2: Voronoi mesh...")
try:
    mesh = generate_voronoi(Rectangle(0.0, 2.0, 0.0, 2.0), 40, 10, 42)
    reg = regularity_report(mesh)
    print(f"✅ Mesh generated")
    print(f"   Cells: {mesh.n_cells}, faces: {mesh.n_faces}, h = {mesh.h:.4f}")
    print(f"   Regularity: min {reg.min():.3f}, mean {reg.mean():.3f}")
except Exception as e:
    print(f"❌ Mesh test failed: {e}")

print()

# Test 3: Coefficients
print("Test 3: Coefficient admissibility...")
try:
    report = validate(baseline_coefficients())
    print(f"✅ Coefficients checked: {'admissible' if report.ok else 'VIOLATIONS'}")
    for violation in report.violations:
        print(f"   {violation.value}")
except Exception as e:
    print(f"❌ Coefficient test failed: {e}")

print()

# Test 4: Steady convergence
print("Test 4: Steady manufactured solution on 4x4 and 8x8...")
try:
    rect = Rectangle(0.0, 2.0, 0.0, 2.0)
    table = convergence_study(convergence_case(steady=True),
                              [generate_cartesian(rect, n, n) for n in (4, 8)],
                              1, ThetaScheme.steady())
    rates = table.final_rates()
    print(f"✅ Convergence table computed")
    for name, rate in rates.items():
        print(f"   {name}: rate {rate:.2f}")
except Exception as e:
    print(f"❌ Convergence test failed: {e}")

print()

# Test 5: Nonlinear fixed point
print("Test 5: Nonlinear time stepping...")
try:
    space = DgSpace(generate_cartesian(Rectangle(0.0, 2.0, 0.0, 2.0), 2, 2), 1)
    result = run(convergence_case(baseline_coefficients(c_f=1.0)), space,
                 ThetaScheme(0.5, 0.01, 0.03), FixedPointConfig())
    print(f"✅ {len(result.diagnostics)} steps")
    print(f"   Mean fixed-point iterations: {result.mean_iterations:.2f}")
except Exception as e:
    print(f"❌ Nonlinear test failed: {e}")

print()

# Test 6: Inf-sup estimate
print("Test 6: Discrete inf-sup constant...")
try:
    value = estimate_infsup(DgSpace(generate_cartesian(Rectangle(0.0, 1.0, 0.0, 1.0), 3, 3), 1))
    print(f"✅ Inf-sup estimate: {value:.4e}")
except Exception as e:
    print(f"❌ Inf-sup test failed: {e}")

print()

# Test 7: Geothermal set-up
print("Test 7: Geothermal boundary layout...")
try:
    case = geothermal_case(60.0)
    print(f"✅ {case.name}")
    print(f"   Temperature boundary kinds: "
          f"{ {tag: type(bc).__name__ for tag, bc in sorted(case.bcs.temperature.items())} }")
except Exception as e:
    print(f"❌ Geothermal test failed: {e}")

print()
print("=" * 70)
print("✅ TPE VERIFICATION COMPLETE")
print("=" * 70)
print()
print("Next steps:")
print("  pytest                         # unit tests")
print("  pytest --runslow               # plus convergence rates")
print("  python -m src convergence --preset fig1-l1 --jobs 4")
print("  python -m src geothermal --preset geothermal-ci")
