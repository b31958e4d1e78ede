"""
Action tags and the multiple-choice benchmark
=============================================

Tag narrations with a synonym taxonomy, see which pairs count as positives of
each other, and build intra- and inter-video questions.
"""

# %%
from egocurate.fixtures import bundled_fixture
from egocurate.ingest import filter_narrations, filter_videos, group_streams, read_narrations, read_video_meta
from egocurate.mcq import build_mcq, select_annotator, validate_mcq
from egocurate.pairing import pair_clips
from egocurate.taxonomy import Taxonomy, positive_score, tag_narration

paths = bundled_fixture()
tax = Taxonomy.load(paths["taxonomy"])

for text in ["#C C takes the phone", "#C C picks up the mobile phone", "#C C puts down the cup"]:
    t = tag_narration(text, tax)
    print(f"{text!r:38} verb={tax.verb_label(t.first_verb)} noun={tax.noun_label(t.first_noun)}")

a = tag_narration("#C C takes the phone", tax)
b = tag_narration("#C C picks the cellphone", tax)
print("shared action score:", positive_score(a, b))

# %%
videos = {m.video_uid: m for m in filter_videos(read_video_meta(paths["meta"]))[0]}
kept, _ = filter_narrations(read_narrations(paths["narrations"]).records(), videos)
streams = {
    k: [p.with_tags(tag_narration(p.text, tax)) for p in pair_clips(recs, duration=videos[k[0]].duration_sec)]
    for k, recs in group_streams(kept).items()
}
# one annotator per video, as in the benchmark
corpus = [p for recs in select_annotator(streams, "random", rng=0).values() for p in recs]
print(len(corpus), "tagged clips")

# %%
for setting in ("inter", "intra"):
    res = build_mcq(corpus, setting, count=200, seed=7)
    print(setting, len(res.questions), "questions, problems:", validate_mcq(res.questions, corpus))
    q = res.questions[0]
    print("  query:", q.query_text)
    for k, o in enumerate(q.options):
        mark = "*" if k == q.answer_index else " "
        print(f"  {mark} {o.video_uid:12} [{o.t_start:7.2f}, {o.t_end:7.2f}] {o.text}")
