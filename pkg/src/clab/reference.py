"""Brute-force reference implementations used to verify the fast paths.

Everything here is written with explicit python loops and double precision
scalars, deliberately sharing no code with the vectorized implementations it
checks: no similarity matrices, no shared softmax or normalization helpers.
Slow on purpose; only suitable for small verification batches.
"""

import math


def _cos(u, v):
    dot = 0.0
    nu = 0.0
    nv = 0.0
    for a, b in zip(u, v):
        a = float(a)
        b = float(b)
        dot += a * b
        nu += a * a
        nv += b * b
    denom = math.sqrt(nu) * math.sqrt(nv)
    if denom < 1e-12:
        denom = 1e-12
    return dot / denom


def info_nce_oracle(embeddings, video_index, tau):
    """Loop-computed mean InfoNCE over all (anchor, positive) pairs."""
    tau = float(tau)
    if tau <= 0.0:
        raise ValueError("temperature must be > 0")
    emb = [list(map(float, row)) for row in embeddings]
    vid = [int(v) for v in video_index]
    if len(emb) != len(vid):
        raise ValueError("video_index length does not match embeddings")
    distinct = sorted(set(vid))
    if len(distinct) < 2:
        raise ValueError("contrastive batch needs at least 2 distinct videos")
    for v in distinct:
        if vid.count(v) < 2:
            raise ValueError(f"video {v} has a single frame in the batch; no positive exists")

    total = 0.0
    pairs = 0
    for a in range(len(emb)):
        denom = 0.0
        for k in range(len(emb)):
            if k == a:
                continue
            denom += math.exp(_cos(emb[a], emb[k]) / tau)
        for p in range(len(emb)):
            if p == a or vid[p] != vid[a]:
                continue
            numer = math.exp(_cos(emb[a], emb[p]) / tau)
            total += -math.log(numer / denom)
            pairs += 1
    return total / pairs


def alignment_gap_oracle(embeddings, video_index):
    """Loop-computed intra-video minus inter-video mean cosine similarity."""
    emb = [list(map(float, row)) for row in embeddings]
    vid = [int(v) for v in video_index]
    intra = []
    inter = []
    for a in range(len(emb)):
        for k in range(len(emb)):
            if k == a:
                continue
            sim = _cos(emb[a], emb[k])
            if vid[a] == vid[k]:
                intra.append(sim)
            else:
                inter.append(sim)
    if not intra or not inter:
        raise ValueError("need both intra-video and inter-video pairs")
    return sum(intra) / len(intra) - sum(inter) / len(inter)


def _iou(a, b):
    ix1 = max(a[0], b[0])
    iy1 = max(a[1], b[1])
    ix2 = min(a[2], b[2])
    iy2 = min(a[3], b[3])
    iw = max(0.0, ix2 - ix1)
    ih = max(0.0, iy2 - iy1)
    inter = iw * ih
    if inter == 0.0:
        return 0.0
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def average_precision_oracle(detections, truths, iou_thresh=0.5):
    """Enumerated precision/recall curve for one class on one frame set.

    ``detections`` are ``(score, box, frame)`` tuples, ``truths`` are
    ``(box, frame)`` tuples. Walks detections in score order, marks each
    TP/FP by greedy IoU matching, lists every (recall, precision) point,
    then integrates the running-max envelope step by step.
    """
    if not truths:
        return None
    dets = sorted(enumerate(detections), key=lambda t: (-t[1][0], t[0]))
    matched = [False] * len(truths)
    points = []  # (recall, precision)
    tp = 0
    fp = 0
    for _, (score, box, frame) in dets:
        best = -1
        best_iou = 0.0
        for ti, (tbox, tframe) in enumerate(truths):
            if matched[ti] or tframe != frame:
                continue
            ov = _iou(box, tbox)
            if ov >= iou_thresh and ov > best_iou:
                best_iou = ov
                best = ti
        if best >= 0:
            matched[best] = True
            tp += 1
        else:
            fp += 1
        points.append((tp / len(truths), tp / (tp + fp)))
    if not points:
        return 0.0

    # running max of precision from the high-recall end
    envelope = []
    best_p = 0.0
    for rec, prec in reversed(points):
        best_p = max(best_p, prec)
        envelope.append((rec, best_p))
    envelope.reverse()

    ap = 0.0
    prev_rec = 0.0
    for rec, prec in envelope:
        if rec > prev_rec:
            ap += (rec - prev_rec) * prec
            prev_rec = rec
    return ap
