import pandas as pd
from sklearn.ensemble import ExtraTreesRegressor
from sklearn.metrics import mean_absolute_error
train = pd.read_csv('train.csv')
valid = pd.read_csv('valid.csv')
setup = {'n_estimators': 400, 'min_samples_leaf': 2, 'bootstrap': False}
trees = ExtraTreesRegressor(n_estimators=400, min_samples_leaf=2, bootstrap=False, n_jobs=4)
trees.fit(train.drop(columns=['y']), train['y'])
mae = mean_absolute_error(valid['y'], trees.predict(valid.drop(columns=['y'])))
