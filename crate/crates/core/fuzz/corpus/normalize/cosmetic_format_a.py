import numpy as np
from sklearn.metrics import mean_squared_error

def rmse(y_true, y_pred):
    return np.sqrt(mean_squared_error(y_true, y_pred))

scores = [rmse(a, b) for a, b in zip([1, 2], [1.5, 2.5])]
