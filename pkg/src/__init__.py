# Source Package: RAF VQA head (tensors, autodiff, fusion, attention, models, training, data, evaluation, cli)
