#!/usr/bin/env python3
"""Transformer fine-tuning adapter for the external classifier backend.

Usage (invoked by hatedet):
    hf_backend.py train <request.json>
    hf_backend.py predict <request.json>

The model config supplies the backbone name, learning rate, batch sizes,
epoch count, seed and maximum sequence length.
"""
import json
import os
import random
import sys

import numpy as np
import torch
from torch.utils.data import DataLoader
from transformers import AutoModelForSequenceClassification, AutoTokenizer


def seed_everything(seed):
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)


def batches(texts, labels, tokenizer, max_len, batch_size, shuffle, seed):
    order = list(range(len(texts)))
    if shuffle:
        random.Random(seed).shuffle(order)
    for start in range(0, len(order), batch_size):
        idx = order[start:start + batch_size]
        enc = tokenizer([texts[i] for i in idx], truncation=True, max_length=max_len,
                        padding=True, return_tensors="pt")
        if labels is not None:
            enc["labels"] = torch.tensor([labels[i] for i in idx])
        yield enc


def train(req):
    cfg = req["config"]
    seed_everything(cfg["seed"])
    device = "cuda" if torch.cuda.is_available() else "cpu"
    tokenizer = AutoTokenizer.from_pretrained(cfg["backbone"])
    model = AutoModelForSequenceClassification.from_pretrained(
        cfg["backbone"], num_labels=len(req["labels"]), ignore_mismatched_sizes=True)
    model.to(device)
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg["learning_rate"])
    texts = [x["text"] for x in req["train"]]
    labels = [x["label"] for x in req["train"]]
    out_dir = req["output_dir"]
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "epochs.jsonl"), "w") as log:
        for epoch in range(1, cfg["epochs"] + 1):
            model.train()
            total, steps = 0.0, 0
            for batch in batches(texts, labels, tokenizer, cfg["max_sequence_length"],
                                 cfg["train_batch_size"], True, cfg["seed"] + epoch):
                batch = {k: v.to(device) for k, v in batch.items()}
                loss = model(**batch).loss
                loss.backward()
                optimizer.step()
                optimizer.zero_grad()
                total += loss.item()
                steps += 1
            ckpt = os.path.join(out_dir, f"epoch-{epoch}")
            model.save_pretrained(ckpt)
            tokenizer.save_pretrained(ckpt)
            log.write(json.dumps({"epoch": epoch, "loss": total / max(steps, 1), "checkpoint": ckpt}) + "\n")
            log.flush()


def predict(req):
    cfg = req["config"]
    device = "cuda" if torch.cuda.is_available() else "cpu"
    tokenizer = AutoTokenizer.from_pretrained(req["checkpoint"])
    model = AutoModelForSequenceClassification.from_pretrained(req["checkpoint"])
    model.to(device)
    model.eval()
    items = req["instances"]
    texts = [x["text"] for x in items]
    rows = []
    with torch.no_grad():
        for batch in batches(texts, None, tokenizer, cfg["max_sequence_length"],
                             cfg["test_batch_size"], False, 0):
            batch = {k: v.to(device) for k, v in batch.items()}
            probs = torch.softmax(model(**batch).logits.double(), dim=-1)
            rows.extend(probs.cpu().tolist())
    with open(req["output"], "w") as out:
        for item, scores in zip(items, rows):
            top = max(range(len(scores)), key=lambda i: (scores[i], -i))
            out.write(json.dumps({"id": item["id"], "label": top}) + "\n")


if __name__ == "__main__":
    if len(sys.argv) != 3 or sys.argv[1] not in ("train", "predict"):
        sys.exit(__doc__)
    with open(sys.argv[2]) as fh:
        request = json.load(fh)
    (train if sys.argv[1] == "train" else predict)(request)
