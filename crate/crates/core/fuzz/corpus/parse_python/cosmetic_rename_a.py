import pandas as pd

def preprocess(df):
    numeric = df.select_dtypes(include=['number'])
    filled = numeric.fillna(numeric.median())
    return filled

train_df = pd.read_csv('./input/train.csv')
features = preprocess(train_df)
