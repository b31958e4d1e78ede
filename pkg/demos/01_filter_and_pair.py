"""
Cleaning narrations and cutting clips
=====================================

Start from the bundled synthetic corpus, drop noisy narrations and unusable
videos, then turn each narration into a clip with every pairing strategy.
"""

# %%
import numpy as np

from egocurate.fixtures import bundled_fixture
from egocurate.ingest import filter_narrations, filter_videos, group_streams, read_narrations, read_video_meta
from egocurate.pairing import PairingConfig, Strategy, locate_segment, pair_clips

paths = bundled_fixture()
parsed = read_narrations(paths["narrations"])
print(f"{len(parsed)} narrations parsed, {len(parsed.errors)} bad line(s):")
for err in parsed.errors:
    print("  line", err.line_no, "-", err.reason)

# %%
# Over-wide videos go, stereo ones stay but are read at half width.
videos, video_report = filter_videos(read_video_meta(paths["meta"]))
print(video_report.to_dict())

kept, report = filter_narrations(parsed.records(), {m.video_uid: m for m in videos})
print(report.to_dict())

# %%
# One stream per (video, annotator). beta is that stream's mean narration gap.
streams = group_streams(kept)
durations = {m.video_uid: m.duration_sec for m in videos}
key = next(iter(streams))
records = streams[key]

for strategy in Strategy:
    pairs = pair_clips(records, PairingConfig(strategy), durations[key[0]])
    lengths = np.array([p.duration for p in pairs])
    print(f"strategy {strategy.value}: mean {lengths.mean():5.2f}s  std {lengths.std():5.2f}s")

# %%
# Long videos are stored in 10-minute segments; find the one each clip lives in.
pairs = pair_clips(records, PairingConfig(), durations[key[0]])
for p in pairs[:3] + pairs[-2:]:
    loc = locate_segment(p)
    print(f"[{p.t_start:7.2f}, {p.t_end:7.2f}] -> segment {loc.segment_index} [{loc.local_start:.2f}, {loc.local_end:.2f}]")
