#!/usr/bin/env python3
"""Writes the bundled synthetic mini-corpus (data/mini_corpus.jsonl).

200 articles dated 2020-01-21 .. 2020-05-19 with planted topics that drift
week by week, a Dhaka-heavy location mix, weekly publishing rhythm, and
class / subclass / sentiment labels. Roughly a third of the articles are
English with a Bengali `translated_body`. Output is deterministic.
"""

import argparse
import datetime as dt
import json
import math
import random
from pathlib import Path

SEED = 20200121
START = dt.date(2020, 1, 21)
DAYS = 120
N_ARTICLES = 200

# Topic word pools (Bengali compounds of 7+ letters survive the length filter;
# English counterparts feed the English bodies).
TOPICS = {
    "health": (
        "স্বাস্থ্যমন্ত্রণালয় আইইডিসিআর শনাক্তকরণ কোয়ারেন্টাইন চিকিৎসাকেন্দ্র নমুনাপরীক্ষা স্বাস্থ্যকর্মী ভেন্টিলেটরসংকট হাসপাতালব্যবস্থাপনা",
        "ministry institute detection quarantine treatment sampling healthworker ventilator hospital",
    ),
    "lockdown": (
        "গণপরিবহন সাধারণছুটিঘোষণা যানচলাচলবন্ধ আইনশৃঙ্খলা জরুরিঅবস্থা সেনাবাহিনীমোতায়েন ঘরেথাকারনির্দেশ চেকপোস্টস্থাপন",
        "transport holidays traffic lawenforcement emergency soldiers stayhome checkpoints",
    ),
    "economy": (
        "পোশাকশিল্পকারখানা প্রণোদনাপ্যাকেজ বাংলাদেশব্যাংক অর্থনীতিবিদ কর্মসংস্থান রপ্তানিআয়হ্রাস মুদ্রাস্ফীতিচাপ বেতনভাতা",
        "garments stimulus centralbank economists employment exports inflation salaries",
    ),
    "relief": (
        "ত্রাণসামগ্রী খাদ্যসহায়তা স্বেচ্ছাসেবক দরিদ্রপরিবার নগদসহায়তা মানবিকসহায়তা দাতব্যসংস্থা চালবিতরণ",
        "reliefgoods foodsupport volunteers poorfamilies cashsupport humanitarian charities distribution",
    ),
    "international": (
        "বিশ্বস্বাস্থ্যসংস্থা আন্তর্জাতিকফ্লাইট যুক্তরাষ্ট্র প্রবাসীশ্রমিক বিমানবন্দর ভ্যাকসিনগবেষণা টিকাউন্নয়ন চীনফেরত",
        "worldhealth flights unitedstates migrants airport vaccineresearch development returnees",
    ),
    "education": (
        "শিক্ষাপ্রতিষ্ঠান অনলাইনক্লাস পরীক্ষাস্থগিত শিক্ষার্থী বিশ্ববিদ্যালয় সংসদটেলিভিশন শিক্ষামন্ত্রণালয় এসএসসিফলাফল",
        "institutions onlineclass postponed students university television education results",
    ),
}
TOPIC_NAMES = list(TOPICS)

POSITIVE = (
    "আশাবাদী সফলতাঅর্জন সহযোগিতাবৃদ্ধি উন্নতিলক্ষণীয় সুস্থতারহার স্বস্তিপ্রকাশ",
    "hopeful success cooperation improvement recovery relieved",
)
NEGATIVE = (
    "মৃত্যুবরণ দুর্ভোগবৃদ্ধি সংকটাপন্ন আতঙ্কিতমানুষ ক্ষতিগ্রস্ত বিপর্যয়ের",
    "deaths suffering critical panicked damaged disaster",
)
# Short function words and stopwords: they pad the text and are filtered out.
FILLER_BN = "এবং করে থেকে জন্য বলেন তিনি আরও এই সময় দেশে আজ গতকাল রোগী সরকার মানুষ খবর জেলা".split()
FILLER_EN = "the and for from said that this with were today people officials".split()

# Class indices (1-based, as in the label files) each topic tends to produce.
TOPIC_CLASSES = {
    "health": [1, 8, 8, 1],
    "lockdown": [4, 5, 4],
    "economy": [3, 5, 3],
    "relief": [6, 6, 2],
    "international": [7, 7, 8],
    "education": [2, 5, 2],
}
# Topic weight by phase of the outbreak.
PHASES = [
    (dt.date(2020, 3, 7), {"international": 5, "health": 2, "education": 1, "economy": 1, "lockdown": 0.3, "relief": 0.3}),
    (dt.date(2020, 4, 4), {"health": 4, "lockdown": 4, "education": 2, "international": 1.5, "economy": 1, "relief": 1}),
    (dt.date(2020, 6, 1), {"relief": 4, "economy": 4, "health": 3, "lockdown": 2, "education": 1, "international": 1}),
]
DHAKA = ["Dhaka"] * 8 + ["Gazipur", "Narayanganj", "Narsingdi", "Tangail", "Faridpur", "Manikganj", "Munshiganj"]
OTHER = ["Chittagong", "Cox's Bazar", "Comilla", "Sylhet", "Moulvibazar", "Khulna", "Jessore", "Rajshahi",
         "Bogra", "Rangpur", "Dinajpur", "Barisal", "Bhola", "Mymensingh", "Netrokona"]
FOREIGN = ["China", "Wuhan", "Italy", "United States", "India", "Saudi Arabia", "Singapore"]
UNRESOLVED = ["Char Kukri Mukri island", "unspecified"]
SOURCES_BN = ["Prothom Alo", "Kaler Kantho", "Jugantor", "Bangladesh Pratidin"]
SOURCES_EN = ["The Daily Star", "Dhaka Tribune", "bdnews24"]


def day_weights():
    weights = []
    for i in range(DAYS):
        d = START + dt.timedelta(days=i)
        growth = 0.15 + 1.0 / (1.0 + math.exp(-(i - 50) / 8.0))
        weekly = 0.55 if d.weekday() == 4 else (0.8 if d.weekday() == 5 else 1.0)  # quieter Friday/Saturday
        weights.append(growth * weekly)
    return weights


def phase_weights(date):
    for end, weights in PHASES:
        if date < end:
            return weights
    return PHASES[-1][1]


def pick_weighted(rng, weights):
    names = list(weights)
    return rng.choices(names, [weights[n] for n in names])[0]


def words(pool, lang):
    return pool[0 if lang == "bn" else 1].split()


def compose(rng, lang, main, side, sentiment, length):
    main_words = words(TOPICS[main], lang)
    side_words = words(TOPICS[side], lang)
    mood = words(POSITIVE if sentiment == "positive" else NEGATIVE, lang)
    filler = FILLER_BN if lang == "bn" else FILLER_EN
    out = []
    for _ in range(length):
        r = rng.random()
        if r < 0.45:
            out.append(rng.choice(main_words))
        elif r < 0.55:
            out.append(rng.choice(side_words))
        elif r < 0.67:
            out.append(rng.choice(mood))
        else:
            out.append(rng.choice(filler))
    sentences = []
    for i in range(0, len(out), 9):
        chunk = " ".join(out[i:i + 9])
        sentences.append(chunk + ("।" if lang == "bn" else "."))
    return " ".join(sentences)


def location(rng, main):
    r = rng.random()
    if main == "international" and r < 0.45:
        return rng.choice(FOREIGN)
    if r < 0.03:
        return rng.choice(UNRESOLVED)
    if r < 0.66:
        return rng.choice(DHAKA)
    return rng.choice(OTHER)


def subclass_for(rng, cls):
    # Classes 1-3 own three sub-classes, the rest two: 3*3 + 5*2 = 19.
    first = [1, 4, 7, 10, 12, 14, 16, 18][cls - 1]
    span = 3 if cls <= 3 else 2
    return first + rng.randrange(span)


def generate():
    rng = random.Random(SEED)
    weights = day_weights()
    days = sorted(rng.choices(range(DAYS), weights, k=N_ARTICLES))
    articles = []
    for n, day in enumerate(days):
        date = START + dt.timedelta(days=day)
        main = pick_weighted(rng, phase_weights(date))
        side = rng.choice([t for t in TOPIC_NAMES if t != main])
        lang = "en" if rng.random() < 0.3 else "bn"
        negative_bias = {"health": 0.7, "lockdown": 0.6, "economy": 0.65, "relief": 0.3,
                         "international": 0.6, "education": 0.45}[main]
        sentiment = "negative" if rng.random() < negative_bias else "positive"
        cls = rng.choice(TOPIC_CLASSES[main])
        body_len = rng.randint(40, 90)
        record = {
            "id": f"mini-{n + 1:04d}",
            "source": rng.choice(SOURCES_EN if lang == "en" else SOURCES_BN),
            "language": lang,
            "title": compose(rng, lang, main, side, sentiment, 6).rstrip("।."),
            "body": compose(rng, lang, main, side, sentiment, body_len),
            "summary": compose(rng, lang, main, side, sentiment, 14),
            "published_date": date.isoformat(),
            "location": location(rng, main),
            "class": str(cls),
            "subclass": str(subclass_for(rng, cls)),
            "sentiment": sentiment,
        }
        if lang == "en":
            record["translated_body"] = compose(rng, "bn", main, side, sentiment, body_len)
        articles.append(record)
    return articles


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--output", default=str(Path(__file__).resolve().parent.parent / "data" / "mini_corpus.jsonl"))
    args = parser.parse_args()
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="\n") as f:
        for record in generate():
            f.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    print(f"wrote {N_ARTICLES} articles to {out}")


if __name__ == "__main__":
    main()
