"""Object category vocabulary for the synthetic tabletop scenes."""

CLASS_VOCAB: tuple[str, ...] = (
    "pizza", "banana", "bread", "scissors", "tomato", "cardboardbox", "knife",
    "strawberry", "carambola", "apple", "orange", "lemon", "pear", "peach",
    "grape", "carrot", "potato", "onion", "cucumber", "eggplant", "broccoli",
    "cup", "mug", "bowl", "plate", "fork", "spoon", "spatula", "pan", "pot",
    "bottle", "can", "jar", "kettle", "teapot", "sponge", "towel", "book",
    "pen", "marker", "stapler", "remote", "phone", "mouse", "keyboard",
    "clock", "vase", "candle", "toycar", "rubberduck",
)

ORDINALS: tuple[str, ...] = (
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh",
    "eighth", "ninth", "tenth",
)
