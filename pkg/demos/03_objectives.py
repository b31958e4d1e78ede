"""
Contrastive objectives and their gradients
==========================================

InfoNCE, EgoNCE and the max-margin loss on random unit vectors, with a
finite-difference check of every analytic gradient.
"""

# %%
import numpy as np

from egocurate.contrastive import ego_nce, gradient_check, info_nce, l2_normalize, mimm_loss

rng = np.random.default_rng(0)
video = l2_normalize(rng.normal(size=(6, 16)))
text = l2_normalize(video + 0.7 * rng.normal(size=(6, 16)))

plain = info_nce(video, text, tau=0.05)
print(f"InfoNCE {plain.value:.4f} (video->text {plain.v2t:.4f}, text->video {plain.t2v:.4f})")

# %%
# With only the matched pair positive, EgoNCE is InfoNCE.
print("singleton positives:", ego_nce(video, text, [{i} for i in range(6)]).value)

# Rows 0-2 share an action, so each is a positive of the others.
shared = [{0, 1, 2}, {0, 1, 2}, {0, 1, 2}, {3}, {4}, {5}]
print("shared positives:   ", ego_nce(video, text, shared).value)

# %%
print("gradient error, InfoNCE:", gradient_check(info_nce, [video, text]))
print("gradient error, EgoNCE: ", gradient_check(lambda v, t: ego_nce(v, t, shared), [video, text]))

sims = video @ text.T
corr = np.eye(6)
corr[0, 1] = corr[1, 0] = 0.5
res = mimm_loss(sims, corr, margin=0.2)
print(f"max-margin loss {res.value:.4f}, gradient error", gradient_check(lambda s: mimm_loss(s, corr), [sims]))
