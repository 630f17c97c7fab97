# Copyright 2026 The OHM Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
# WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
# MERCHANTABLITY OR NON-INFRINGEMENT.
# See the Apache 2 License for the specific language governing permissions and
# limitations under the License.

"""Builds a phone-aligned synthetic read-speech corpus with espeak-ng.

Phone boundaries come from the synthesizer's own phoneme events, mapped to
ARPABET. Output layout:

  OUT/wav/<utt>.wav      16-bit mono at the synthesizer rate (22050 Hz)
  OUT/align/<utt>.tsv    start_s, end_s, phone
  OUT/manifest.tsv       with split = train | heldout

Held-out speakers use dialect/variant pairs never seen in training and all
read the same fixed list of oral-only and nasal-loaded sentences.

Requires the espeakng-loader wheel (pip install espeakng-loader).
"""

import argparse
import ctypes
import random
import sys
import wave
from pathlib import Path

import numpy as np

try:
    import espeakng_loader
except ImportError:
    sys.exit("espeakng-loader is not installed (pip install espeakng-loader)")

RATE_PARAM, PITCH_PARAM, RANGE_PARAM = 1, 3, 4
PHONEME_EVENT = 7

ARPABET = {
    "@": "AH", "@2": "AH", "@5": "AH", "@-": "AH", "V": "AH", "a#": "AH",
    "3": "ER", "3:": "ER", "VR": "ER",
    "a": "AE", "aa": "AE",
    "A:": "AA", "A@": "AA", "0": "AA", "0#": "AA",
    "aI": "AY", "aI@": "AY", "aI2": "AY", "aI3": "AY",
    "aU": "AW", "aU@": "AW",
    "e": "EH", "E": "EH", "E2": "EH", "e@": "EH", "E@": "EH",
    "eI": "EY",
    "i": "IY", "i:": "IY", "i@": "IY", "i@3": "IY",
    "I": "IH", "I#": "IH", "I2": "IH", "IR": "IH",
    "O": "AO", "O:": "AO", "O@": "AO", "o@": "AO", "O2": "AO",
    "oU": "OW", "o": "OW", "OI": "OY",
    "U": "UH", "U@": "UH", "u": "UW", "u:": "UW",
    "p": "P", "b": "B", "t": "T", "t#": "T", "t[": "T", "t2": "T", "?": "T",
    "d": "D", "d#": "D", "k": "K", "g": "G", "f": "F", "v": "V",
    "T": "TH", "D": "DH", "s": "S", "z": "Z", "z#": "Z", "S": "SH", "Z": "ZH",
    "h": "HH", "x": "HH", "tS": "CH", "dZ": "JH",
    "m": "M", "m-": "M", "n": "N", "n-": "N", "N": "NG",
    "l": "L", "@L": "L", "l/": "L", "r": "R", "r-": "R",
    "w": "W", "w#": "W", "hw": "W", "j": "Y",
}
PAUSES = {"_", "_:", "_!", "_|", "_;"}

TRAIN_LANGS = ["en-us", "en", "en-gb-x-rp", "en-029", "en-gb-scotland", "en-us-nyc"]
TRAIN_VARIANTS = ["", "m1", "m2", "m3", "f1", "f2", "f3"]
HELDOUT_LANGS = ["en-gb-x-gbclan", "en-gb-x-gbcwmd"]
HELDOUT_VARIANTS = ["m4", "m5", "m6", "m7", "f4", "f5"]

GENERAL = """the a to of is it that was he for as with his they be at by this had but or from
have all she there were we her your so up do if about who get which go out their would what
could say like look day two said each way water call oil just few big three year too give take
part where street house set hold far why ask keep letter above before tree draw city right old
early stood eye face light story sea horse add high play food foot kid art school car dog cat
bird bus box cup bag boy girl ship sheep cheese peach pizza baby puppy ladder paper pepper table
chair sofa cookie cake bike kite fish key shoe sock top toy hat coat shirt dress tooth tea juice
rice pie sugar salt lake river hill road trail field forest world work read write sleep sit walk
jump stop push pull catch throw kick dig eat drink fly sail ride visit tell help love wish hide
feed heavy soft quick slow easy hard happy sad hot cold wet dry short tall little great good bad
fast full quiet loud dirty pretty shy busy lucky silly very really every today after over under
again because people window garden kitchen minute morning evening number animal mother brother
sister friend summer winter spring autumn mountain ocean island village country money question
answer language machine moment station picture journey doctor engine dinner lunch breakfast
""".split()

NASAL = """mommy many money moon noon name nine man men woman mine mean more meal milk mind
know now new nose net nice number nothing lemon melon mango banana onion sunny running singing
ringing long song king wing thing among ring spring think monday minute moment mountain morning
evening dinner noun name hammer summer swimming lamb mane mama nanny ninety nineteen meaning
""".split()

FUNCTION = "the a an and in on my me no not one".split()


def is_oral(word):
    return "m" not in word and "n" not in word


ORAL = [w for w in GENERAL if is_oral(w)]


class Event(ctypes.Structure):
    _fields_ = [("type", ctypes.c_int), ("unique_identifier", ctypes.c_uint),
                ("text_position", ctypes.c_int), ("length", ctypes.c_int),
                ("audio_position", ctypes.c_int), ("sample", ctypes.c_int),
                ("user_data", ctypes.c_void_p), ("id", ctypes.c_char * 8)]


SynthCallback = ctypes.CFUNCTYPE(ctypes.c_int, ctypes.POINTER(ctypes.c_short), ctypes.c_int,
                                 ctypes.POINTER(Event))


class Synth:
    def __init__(self):
        self.lib = ctypes.CDLL(espeakng_loader.get_library_path())
        self.rate = self.lib.espeak_Initialize(2, 500, espeakng_loader.get_data_path().encode(), 1)
        if self.rate <= 0:
            raise RuntimeError("espeak_Initialize failed")
        self._chunks = []
        self._events = []
        self._cb = SynthCallback(self._collect)
        self.lib.espeak_SetSynthCallback(self._cb)

    def _collect(self, wav, n, ev):
        if wav and n > 0:
            self._chunks.append(ctypes.string_at(wav, 2 * n))
        i = 0
        while ev[i].type != 0:
            if ev[i].type == PHONEME_EVENT:
                self._events.append((ev[i].audio_position, ev[i].id.decode("ascii", "replace")))
            i += 1
        return 0

    def voice(self, name, rate, pitch, pitch_range):
        if self.lib.espeak_SetVoiceByName(name.encode()) != 0:
            raise RuntimeError(f"unknown voice {name}")
        self.lib.espeak_SetParameter(RATE_PARAM, rate, 0)
        self.lib.espeak_SetParameter(PITCH_PARAM, pitch, 0)
        self.lib.espeak_SetParameter(RANGE_PARAM, pitch_range, 0)

    def say(self, text):
        self._chunks, self._events = [], []
        b = text.encode()
        self.lib.espeak_Synth(b, len(b) + 1, 0, 0, 0, 0, None, None)
        pcm = np.frombuffer(b"".join(self._chunks), dtype=np.int16)
        return pcm, self._events


def to_segments(events, duration_s):
    """Phoneme events -> merged, non-overlapping ARPABET segments."""
    segs = []
    for k, (ms, name) in enumerate(events):
        start = ms / 1000.0
        end = events[k + 1][0] / 1000.0 if k + 1 < len(events) else duration_s
        end = min(end, duration_s)
        key = name.lstrip("',%=")
        if key == ";":  # palatalisation mark, part of the previous phone
            if segs:
                segs[-1][1] = max(segs[-1][1], end)
            continue
        phone = "sil" if key in PAUSES else ARPABET.get(key)
        if phone is None:
            raise KeyError(f"no ARPABET mapping for espeak phoneme {name!r}")
        if end <= start:
            continue
        if segs and segs[-1][2] == phone == "sil":
            segs[-1][1] = end
        else:
            segs.append([start, end, phone])
    return segs


def write_wav(path, pcm, rate):
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(pcm.astype("<i2").tobytes())


def sentence(rng, pool, n_min, n_max):
    words = [rng.choice(pool) for _ in range(rng.randint(n_min, n_max))]
    return " ".join(words).capitalize() + "."


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True, type=Path)
    ap.add_argument("--train-minutes", type=float, default=65.0)
    ap.add_argument("--heldout-speakers", type=int, default=12)
    ap.add_argument("--oral-sentences", type=int, default=20)
    ap.add_argument("--nasal-sentences", type=int, default=10)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    if args.heldout_speakers > len(HELDOUT_LANGS) * len(HELDOUT_VARIANTS):
        sys.exit("too many held-out speakers requested")

    rng = random.Random(args.seed)
    noise = np.random.default_rng(args.seed)
    synth = Synth()
    (args.out / "wav").mkdir(parents=True, exist_ok=True)
    (args.out / "align").mkdir(parents=True, exist_ok=True)
    rows = []
    stats = {"train": 0.0, "heldout": 0.0}

    def render(utt, speaker, text, split, sentence_id, category, oral):
        pcm, events = synth.say(text)
        # Faint dither keeps pauses from being digital zero.
        pcm = np.clip(pcm + noise.normal(0.0, 3.0, pcm.size), -32768, 32767).astype(np.int16)
        duration = pcm.size / synth.rate
        segs = to_segments(events, duration)
        if oral and any(p in ("M", "N", "NG") for _, _, p in segs):
            raise RuntimeError(f"oral sentence {text!r} produced a nasal phone")
        write_wav(args.out / "wav" / f"{utt}.wav", pcm, synth.rate)
        with open(args.out / "align" / f"{utt}.tsv", "w") as f:
            f.write("start_s\tend_s\tphone\n")
            for s, e, p in segs:
                f.write(f"{s:.3f}\t{e:.3f}\t{p}\n")
        rows.append((f"wav/{utt}.wav", f"align/{utt}.tsv", speaker, utt, "1" if oral else "0",
                     sentence_id, category, split))
        stats[split] += duration

    train_voices = [(lang, var) for lang in TRAIN_LANGS for var in TRAIN_VARIANTS]
    mixed = GENERAL + NASAL + FUNCTION
    k = 0
    while stats["train"] < 60.0 * args.train_minutes:
        lang, var = train_voices[k % len(train_voices)]
        voice = lang + ("+" + var if var else "")
        synth.voice(voice, rng.randint(140, 200), rng.randint(30, 70), rng.randint(30, 70))
        speaker = "tr_" + voice.replace("+", "_")
        render(f"train_{k:05d}", speaker, sentence(rng, mixed, 6, 12), "train", f"train_{k:05d}", "train", False)
        k += 1

    oral = [sentence(rng, ORAL, 5, 9) for _ in range(args.oral_sentences)]
    nasal = []
    for _ in range(args.nasal_sentences):
        words = [rng.choice(NASAL) for _ in range(rng.randint(4, 7))]
        words.insert(rng.randint(0, len(words)), rng.choice(FUNCTION))
        nasal.append(" ".join(words).capitalize() + ".")
    heldout_voices = [(lang, var) for var in HELDOUT_VARIANTS for lang in HELDOUT_LANGS]
    for h in range(args.heldout_speakers):
        lang, var = heldout_voices[h]
        voice = f"{lang}+{var}"
        speaker = "ho_" + voice.replace("+", "_")
        synth.voice(voice, 150 + 5 * h, 35 + 3 * h, 50)
        for i, text in enumerate(oral):
            render(f"{speaker}_oral{i:02d}", speaker, text, "heldout", f"oral{i:02d}", "oral", True)
        for i, text in enumerate(nasal):
            render(f"{speaker}_nasal{i:02d}", speaker, text, "heldout", f"nasal{i:02d}", "nasal", False)

    with open(args.out / "manifest.tsv", "w") as f:
        f.write("audio_path\talignment_path\tspeaker_id\tutterance_id\tis_oral\tsentence_id\tcategory\tsplit\n")
        for r in rows:
            f.write("\t".join(r) + "\n")
    print(f"train {stats['train'] / 60:.1f} min, held-out {stats['heldout'] / 60:.1f} min, {len(rows)} utterances")


if __name__ == "__main__":
    main()
