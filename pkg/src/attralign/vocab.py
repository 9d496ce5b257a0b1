"""Curated vocabulary behind the shipped lexicon, dictionary and word vectors.

The synthetic generator renders sentences from the same lists, so every
generated token is covered by the lexicon.
"""

COLORS = (
    "black", "white", "red", "blue", "green", "gray", "yellow",
    "purple", "brown", "pink", "orange", "tan",
)

OTHER_ADJECTIVES = (
    "dark", "light", "long", "plain", "striped", "checkered", "bright",
    "small", "large", "big", "loose", "tight", "navy", "grey", "beige",
)

GARMENTS = {
    "head": ("hat", "cap", "glasses", "sunglasses", "helmet", "beanie", "hood", "hair"),
    "upper": ("shirt", "jersey", "polo", "jacket", "coat", "sweater", "tshirt", "blouse",
              "top", "hoodie", "vest"),
    "lower": ("skirt", "pants", "jeans", "shorts", "trousers", "leggings", "slacks"),
    "shoes": ("shoes", "boots", "sneakers", "sandals", "heels", "slippers", "loafers"),
    "bags": ("backpack", "bag", "handbag", "purse", "satchel", "suitcase", "tote"),
}

PERSON_NOUNS = ("person", "man", "woman", "girl", "boy", "lady", "guy", "pedestrian")

VERBS = (
    "wearing", "wears", "carrying", "carries", "walking", "walks", "holding",
    "holds", "has", "is", "are", "standing", "looking", "dressed",
)

STOPWORDS = (
    "a", "an", "the", "and", "in", "with", "of", "on", "at", "to", "her", "his",
    "their", "she", "he", "this", "that", "also", "or", "over", "under", "for",
    "while", "who", "some", "pair",
)
