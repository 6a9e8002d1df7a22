import numpy as np
import pandas as pd
from sklearn.ensemble import RandomForestRegressor
train = pd.read_csv('train.csv')
params = {'n_estimators': 200, 'max_depth': 8, 'random_state': 0}
features = train.drop(columns=['SalePrice'])
target = np.log1p(train['SalePrice'])
model = RandomForestRegressor(n_estimators=200, max_depth=8, n_jobs=-1)
model.fit(features, target)
preds = model.predict(features)
