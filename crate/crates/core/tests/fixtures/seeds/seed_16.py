import pandas as pd
from lightgbm import LGBMRegressor
train = pd.read_csv('train.csv')
cats = [c for c in train.columns if train[c].dtype == object]
for col in cats:
    train[col] = train[col].astype('category')
spec = {'num_leaves': 31, 'learning_rate': 0.05, 'n_estimators': 1000}
lgbm = LGBMRegressor(num_leaves=31, learning_rate=0.05, n_estimators=1000, verbose=-1)
lgbm.fit(train.drop(columns=['y']), train['y'])
