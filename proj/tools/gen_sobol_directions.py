"""Emit include/volrough/detail/sobol_directions.hpp from the Joe-Kuo
direction numbers shipped with scipy (new-joe-kuo-6.21201)."""
import sys
import numpy as np
import scipy.stats

DIMS = int(sys.argv[1]) if len(sys.argv) > 1 else 5000
path = scipy.stats.__path__[0] + "/_sobol_direction_numbers.npz"
data = np.load(path)
poly = data["poly"][:DIMS]
vinit = data["vinit"][:DIMS]
width = vinit.shape[1]

out = []
out.append("#pragma once")
out.append("")
out.append("// Generated by tools/gen_sobol_directions.py. Do not edit.")
out.append("// Joe & Kuo (2008) primitive polynomials and initial direction numbers")
out.append("// (new-joe-kuo-6.21201), first %d dimensions." % DIMS)
out.append("// Each polynomial is stored with its leading and trailing bits.")
out.append("")
out.append("#include <cstdint>")
out.append("")
out.append("namespace volrough::detail {")
out.append("")
out.append("inline constexpr int kSobolMaxDim = %d;" % DIMS)
out.append("inline constexpr int kSobolInitWidth = %d;" % width)
out.append("")
out.append("inline constexpr std::uint32_t kSobolPoly[kSobolMaxDim] = {")
for i in range(0, DIMS, 12):
    out.append("    " + ", ".join(str(int(x)) for x in poly[i:i + 12]) + ",")
out.append("};")
out.append("")
out.append("inline constexpr std::uint32_t kSobolInit[kSobolMaxDim][kSobolInitWidth] = {")
for row in vinit:
    last = max([j for j, x in enumerate(row) if x != 0] + [0])
    out.append("    {" + ",".join(str(int(x)) for x in row[:last + 1]) + "},")
out.append("};")
out.append("")
out.append("}  // namespace volrough::detail")
sys.stdout.write("\n".join(out) + "\n")
