from .datasets import LabeledDataset, demo_nine_points, load, save
