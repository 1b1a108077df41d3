"""Regenerates vader_reference.jsonl with the reference scorer.

    pip install vaderSentiment==3.3.2
    python3 gen_vader_fixture.py > vader_reference.jsonl
"""
import json
import random

from vaderSentiment.vaderSentiment import SentimentIntensityAnalyzer

HAND = [
    "good", "not good", "love peace", "", "The book was good.",
    "VADER is smart, handsome, and funny.",
    "VADER is smart, handsome, and funny!",
    "VADER is very smart, handsome, and funny.",
    "VADER is VERY SMART, handsome, and FUNNY.",
    "VADER is VERY SMART, handsome, and FUNNY!!!",
    "VADER is VERY SMART, uber handsome, and FRIGGIN FUNNY!!!",
    "VADER is not smart, handsome, nor funny.",
    "At least it isn't a horrible book.",
    "The book was only kind of good.",
    "The plot was good, but the characters are uncompelling and the dialog is not great.",
    "Today SUX!", "Today only kinda sux! But I'll get by, lol",
    "Make sure you :) or :D today!", "Not bad at all",
    "This war is a disaster for everyone", "I hope peace talks succeed",
    "The missile strike was reported on the news", "No one wants this war",
    "They never so much as apologized", "Without doubt the best speech",
    "He is the least trustworthy leader", "Prices are up again today.",
    "What a terrible decision!!!!", "Is this really happening???",
    "Why?? Why would they do that??", "The bomb was dropped near the city",
    "that movie was the bomb", "yeah right, as if that will work",
    "kiss of death for the economy", "I don't hate them but I don't trust them",
    "This is sort of okay", "It was barely acceptable",
    "Absolutely wonderful diplomacy", "I can't believe how brave these people are",
    "Nothing good comes from sanctions", "Seldom have I seen such courage",
    "No problem at all", "no good deed goes unpunished", "no or nor bad",
    "The leaders met in Geneva", "GREAT job everyone", "great JOB everyone",
    "Shame on the media for this coverage", "Thank you for the honest report",
    "Refugees need water and shelter", "I'm so sad and angry right now",
]

POS = ["good", "great", "love", "peace", "hope", "brave", "wonderful", "respect",
       "support", "thank", "excellent", "happy", "best", "proud", "wise", "safe",
       "calm", "win", "strong", "agree", "nice", "beautiful", "trust", "fair"]
NEG = ["bad", "hate", "terrible", "war", "kill", "fear", "sad", "worst", "evil",
       "ugly", "stupid", "angry", "disaster", "crisis", "destroy", "horrible",
       "shame", "pain", "threat", "crazy", "lies", "killed", "hurt", "weak"]
NEU = ["the", "news", "missile", "president", "oil", "prices", "region", "talks",
       "today", "people", "city", "video", "report", "this", "is", "about",
       "they", "leaders", "iran", "deal", "history", "children", "and", "of"]
MOD = ["very", "so", "really", "extremely", "barely", "slightly", "totally",
       "not", "never", "don't", "isn't", "hardly", "kind of", "sort of", "but"]


def random_sentence(rng):
    words = []
    for _ in range(rng.randint(3, 12)):
        r = rng.random()
        if r < 0.45:
            words.append(rng.choice(NEU))
        elif r < 0.62:
            words.append(rng.choice(POS))
        elif r < 0.79:
            words.append(rng.choice(NEG))
        else:
            words.append(rng.choice(MOD))
    if rng.random() < 0.15:
        i = rng.randrange(len(words))
        words[i] = words[i].upper()
    text = " ".join(words)
    if rng.random() < 0.5:
        text = text[0].upper() + text[1:]
    r = rng.random()
    if r < 0.15:
        text += "!" * rng.randint(1, 6)
    elif r < 0.25:
        text += "?" * rng.randint(1, 5)
    elif r < 0.55:
        text += "."
    return text


def label(c):
    if c >= 0.05:
        return "positive"
    if c <= -0.05:
        return "negative"
    return "neutral"


def main():
    rng = random.Random(20250613)
    sentences = list(HAND)
    while len(sentences) < 200:
        sentences.append(random_sentence(rng))
    analyzer = SentimentIntensityAnalyzer()
    for s in sentences:
        c = analyzer.polarity_scores(s)["compound"]
        print(json.dumps({"text": s, "compound": c, "label": label(c)}, ensure_ascii=False))


if __name__ == "__main__":
    main()
