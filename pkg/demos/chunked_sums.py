# coding: utf-8

# # Summing a contribution stream through K slots
#
# One address may receive many contributions. Instead of caching all of them
# we fold the stream into K running partials and add those at the end.

import numpy as np

from socialfield.accumulator import chunk_count, multi_step_partials, multi_step_sum, one_step_sum

c = np.arange(1.0, 7.0)
print(multi_step_partials(c, 2), multi_step_sum(c, 2), one_step_sum(c))

# A short stream is padded with zeros up to a multiple of K.

print(multi_step_partials([1, 2, 3, 4, 5], 4), chunk_count(5, 4))


# Regrouping changes rounding, not the value. Compare across K on a long stream.

rng = np.random.default_rng(0)
stream = rng.standard_normal(5000)
ref = one_step_sum(stream)
for k in (2, 4, 8, 16):
    got = multi_step_sum(stream, k)
    print(k, got, abs(got - ref) / abs(ref))

# Integer-valued terms add up exactly whatever the grouping.

ints = rng.integers(-1000, 1000, size=5000).astype(np.float64)
print([multi_step_sum(ints, k) == ints.sum() for k in (2, 4, 8, 16)])
