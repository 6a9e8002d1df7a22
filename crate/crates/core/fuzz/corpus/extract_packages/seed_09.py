import numpy as np
from sklearn.neighbors import KNeighborsRegressor
points = np.random.default_rng(0).normal(size=(100, 3))
labels = points.sum(axis=1)
options = {'n_neighbors': 5, 'weights': 'distance', 'p': 2}
knn = KNeighborsRegressor(n_neighbors=5, weights='distance', p=2)
knn.fit(points, labels)
guess = knn.predict(points[:10])
gap = np.abs(guess - labels[:10]).max()
